// Copyright 2026 The TAAF-SNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taaf/energy.hpp"

#include <fmt/format.h>

#include "taaf/error.hpp"

namespace taaf {

void OpCounts::add(const LayerOps& layer) {
  synops += layer.synops;
  snn_macs += layer.snn_macs;
  ann_macs += layer.ann_macs;
  layers.push_back(layer);
}

OpCounts OpCounts::operator+(const OpCounts& other) const {
  OpCounts out;
  out.synops = synops + other.synops;
  out.snn_macs = snn_macs + other.snn_macs;
  out.ann_macs = ann_macs + other.ann_macs;
  out.layers = layers;
  if (other.layers.size() == layers.size()) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      out.layers[i].synops += other.layers[i].synops;
      out.layers[i].snn_macs += other.layers[i].snn_macs;
      out.layers[i].ann_macs += other.layers[i].ann_macs;
    }
  } else {
    out.layers.insert(out.layers.end(), other.layers.begin(), other.layers.end());
  }
  return out;
}

void EnergyModel::validate() const {
  if (!(e_ac > 0.0) || !(e_mac > 0.0)) throw ConfigError("unit energies must be > 0");
}

std::vector<std::uint64_t> conv_fan_out(const Conv1dGeometry& g) {
  std::vector<std::uint64_t> fan(g.in_features(), 0);
  const std::size_t out_len = g.out_length();
  for (std::size_t p = 0; p < out_len; ++p) {
    for (std::size_t k = 0; k < g.kernel; ++k) {
      const std::size_t padded = p * g.stride + k;
      if (padded < g.pad_left || padded - g.pad_left >= g.length) continue;
      const std::size_t i = padded - g.pad_left;
      for (std::size_t c = 0; c < g.in_channels; ++c) fan[c * g.length + i] += g.out_channels;
    }
  }
  return fan;
}

std::uint64_t conv_connections(const Conv1dGeometry& g) {
  std::uint64_t n = 0;
  for (std::uint64_t f : conv_fan_out(g)) n += f;
  return n;
}

namespace {

// x: [B x T x in]; fan_out per input feature.
LayerOps encoder_layer(std::string name, const Tensor& x, const std::vector<std::uint64_t>& fan_out,
                       bool spiking_input) {
  LayerOps op;
  op.name = std::move(name);
  op.spiking_input = spiking_input;
  const std::size_t rows = x.extent(0) * x.extent(1), width = x.extent(2);
  std::uint64_t connections = 0;
  for (std::uint64_t f : fan_out) connections += f;
  op.ann_macs = connections * rows;
  if (!spiking_input) {
    op.snn_macs = op.ann_macs;
    return op;
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < width; ++j)
      if (x[r * width + j] != 0.0) op.synops += fan_out[j];
  return op;
}

LayerOps real_layer(std::string name, std::uint64_t macs) {
  LayerOps op;
  op.name = std::move(name);
  op.snn_macs = macs;
  op.ann_macs = macs;
  return op;
}

}  // namespace

OpCounts count_ops(TaafModel& model, const Dataset& ds) {
  if (ds.size() == 0) throw ConfigError("count_ops: empty dataset");
  OpCounts counts;
  const ModelConfig& mc = model.config();
  const std::uint64_t batch = ds.size();
  const std::uint64_t steps = mc.m1.aligned_timesteps;
  Tape tape;

  for (Modality m : {Modality::kM1, Modality::kM2}) {
    Branch& br = model.branch(m);
    const Tensor& raw = m == Modality::kM1 ? ds.m1 : ds.m2;
    const std::vector<Var> outs = br.encode_layers(tape, tape.constant(raw));
    const std::string prefix = modality_name(m);
    const bool rate = ds.encoding == Encoding::kRate;
    for (std::size_t i = 0; i < br.conv_layers().size(); ++i) {
      const Tensor& in = i == 0 ? raw : outs[i - 1].value();
      counts.add(encoder_layer(fmt::format("{}.conv{}", prefix, i), in,
                               conv_fan_out(br.conv_layers()[i].geometry()), i > 0 || rate));
    }
    const std::size_t nconv = br.conv_layers().size();
    const Tensor& in = nconv == 0 ? raw : outs[nconv - 1].value();
    const std::vector<std::uint64_t> fan(br.linear_layer().in_features(),
                                         br.linear_layer().out_features());
    counts.add(encoder_layer(prefix + ".fc", in, fan, nconv > 0 || rate));
    if (br.config().alignment_enabled) {
      counts.add(real_layer(prefix + ".align",
                            batch * br.feature_width() * br.plan().kernel * steps));
    }
  }

  const std::uint64_t classes = mc.classes;
  const std::uint64_t fused_width = mc.fusion == FusionKind::kConcatenation
                                        ? mc.m1.feature_width + mc.m2.feature_width
                                        : mc.m1.feature_width;
  counts.add(real_layer("classifier.f", batch * fused_width * classes * steps));
  std::uint64_t attn = steps * classes;  // time aggregation of the logits
  if (mc.attention_enabled) {
    const std::uint64_t width = mc.attention_width;
    attn += 2 * steps * classes * width + steps * steps * width;
  }
  counts.add(real_layer("attn.f", batch * attn));
  return counts;
}

EnergyEstimate estimate_energy(const OpCounts& counts, const EnergyModel& model) {
  model.validate();
  EnergyEstimate e;
  e.e_snn = static_cast<double>(counts.synops) * model.e_ac +
            static_cast<double>(counts.snn_macs) * model.e_mac;
  e.e_ann = static_cast<double>(counts.ann_macs) * model.e_mac;
  e.ratio = e.e_ann > 0.0 ? e.e_snn / e.e_ann : 0.0;
  return e;
}

}  // namespace taaf
