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

#include "taaf/model.hpp"

#include <random>

#include <fmt/format.h>

#include "taaf/error.hpp"

namespace taaf {

void ModelConfig::validate() const {
  if (m1.modality != Modality::kM1 || m2.modality != Modality::kM2) {
    throw ConfigError("branch configs must be tagged m1 and m2");
  }
  m1.validate();
  m2.validate();
  if (m1.aligned_timesteps != m2.aligned_timesteps) {
    throw ConfigError(fmt::format("branches align to different T ({} vs {})", m1.aligned_timesteps,
                                  m2.aligned_timesteps));
  }
  if (classes < 2) throw ConfigError("need at least two classes");
  if (attention_width == 0) throw ConfigError("attention width must be >= 1");
  if (fusion == FusionKind::kSummation && m1.feature_width != m2.feature_width) {
    throw ConfigError(fmt::format("summation fusion needs equal feature widths ({} vs {})",
                                  m1.feature_width, m2.feature_width));
  }
}

namespace {

const ModelConfig& checked(const ModelConfig& cfg) {
  cfg.validate();
  return cfg;
}

// One engine per component so that changing one branch's shape does not
// reshuffle the initial weights of the others.
std::mt19937_64 component_rng(std::uint64_t seed, std::uint64_t component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(component), 0x7aafu};
  return std::mt19937_64(seq);
}

template <typename T>
T make_with(std::uint64_t seed, std::uint64_t component, auto&& factory) {
  std::mt19937_64 rng = component_rng(seed, component);
  return factory(rng);
}

}  // namespace

TaafModel::TaafModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(checked(cfg)),
      m1_(make_with<Branch>(seed, 1, [&](std::mt19937_64& r) { return Branch(cfg.m1, r); })),
      m2_(make_with<Branch>(seed, 2, [&](std::mt19937_64& r) { return Branch(cfg.m2, r); })),
      classifier_(make_with<SharedClassifier>(seed, 3, [&](std::mt19937_64& r) {
        return SharedClassifier(cfg.m1.feature_width, cfg.m2.feature_width, cfg.classes, r);
      })),
      heads_{make_with<AttentionHead>(seed, 4, [&](std::mt19937_64& r) {
               return AttentionHead("attn.m1", cfg.classes, cfg.attention_width, r);
             }),
             make_with<AttentionHead>(seed, 5, [&](std::mt19937_64& r) {
               return AttentionHead("attn.m2", cfg.classes, cfg.attention_width, r);
             }),
             make_with<AttentionHead>(seed, 6, [&](std::mt19937_64& r) {
               return AttentionHead("attn.f", cfg.classes, cfg.attention_width, r);
             })} {}

ForwardPass TaafModel::forward(Tape& tape, const Tensor& raw_m1, const Tensor& raw_m2) {
  if (raw_m1.rank() != 3 || raw_m2.rank() != 3 || raw_m1.extent(0) != raw_m2.extent(0)) {
    throw DimensionError(fmt::format("forward: inputs {} and {} disagree on batch",
                                     shape_str(raw_m1.shape()), shape_str(raw_m2.shape())));
  }
  Var s1 = m1_.encode(tape, tape.constant(raw_m1));
  Var s2 = m2_.encode(tape, tape.constant(raw_m2));
  return forward_from_spikes(tape, s1, s2);
}

ForwardPass TaafModel::forward_from_spikes(Tape& tape, const Var& spikes_m1, const Var& spikes_m2) {
  ForwardPass out;
  out.spikes_m1 = spikes_m1;
  out.spikes_m2 = spikes_m2;
  out.h_m1 = m1_.align(tape, spikes_m1);
  out.h_m2 = m2_.align(tape, spikes_m2);
  out.fused = fuse(out.h_m1, out.h_m2, cfg_.fusion);

  out.logits[0] = readout_accumulate(classifier_.unimodal(tape, out.h_m1, Modality::kM1));
  out.logits[1] = readout_accumulate(classifier_.unimodal(tape, out.h_m2, Modality::kM2));
  out.logits[2] = readout_accumulate(classifier_.multimodal(tape, out.fused, cfg_.fusion));

  const std::size_t batch = out.fused.shape()[0];
  const std::size_t steps = out.fused.shape()[1];
  for (std::size_t p = 0; p < kNumPathways; ++p) {
    if (cfg_.attention_enabled) {
      out.alpha_per_sample[p] = heads_[p].scores_per_sample(tape, out.logits[p]);
      out.alpha[p] = mean(out.alpha_per_sample[p], 0);
    } else {
      const double u = 1.0 / static_cast<double>(steps);
      out.alpha_per_sample[p] = tape.constant(Tensor(Shape{batch, steps}, u));
      out.alpha[p] = tape.constant(Tensor(Shape{steps}, u));
    }
  }
  return out;
}

std::vector<Parameter*> TaafModel::parameters() {
  std::vector<Parameter*> out = m1_.parameters();
  for (Parameter* p : m2_.parameters()) out.push_back(p);
  for (Parameter* p : classifier_.parameters()) out.push_back(p);
  for (AttentionHead& h : heads_)
    for (Parameter* p : h.parameters()) out.push_back(p);
  return out;
}

std::size_t TaafModel::parameter_count() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += p->value.size();
  return n;
}

Objective build_objective(const ForwardPass& pass, std::span<const int> labels,
                          const LossConfig& cfg, bool modulation_active) {
  Objective obj;
  for (std::size_t p = 0; p < kNumPathways; ++p) {
    obj.pathway_loss[p] = agl_loss(pass.logits[p], labels, pass.alpha[p], cfg.lambda, cfg.phi);
  }
  obj.modulation = ModulationState::compute(pass.logits[0].value(), pass.alpha[0].value(),
                                            pass.logits[1].value(), pass.alpha[1].value(), labels,
                                            cfg, modulation_active);
  obj.total = total_loss(obj.pathway_loss[0], obj.pathway_loss[1], obj.pathway_loss[2],
                         obj.modulation.k_m1, obj.modulation.k_m2, cfg.beta, modulation_active);
  return obj;
}

}  // namespace taaf
