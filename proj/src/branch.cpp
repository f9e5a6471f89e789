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

#include "taaf/branch.hpp"

#include <fmt/format.h>

#include "taaf/error.hpp"

namespace taaf {

const char* modality_name(Modality m) { return m == Modality::kM1 ? "m1" : "m2"; }

void BranchConfig::validate() const {
  const char* name = modality_name(modality);
  if (native_timesteps == 0 || aligned_timesteps == 0) {
    throw ConfigError(fmt::format("{}: timestep counts must be >= 1", name));
  }
  if (input_features == 0 || feature_width == 0) {
    throw ConfigError(fmt::format("{}: zero feature width", name));
  }
  lif.validate();
  if (alignment_enabled) {
    alignment_plan(native_timesteps, aligned_timesteps);
  } else if (native_timesteps != aligned_timesteps) {
    throw ConfigError(fmt::format("{}: alignment disabled but native T={} differs from fused T={}",
                                  name, native_timesteps, aligned_timesteps));
  }
  std::size_t channels = 1, length = input_features;
  for (std::size_t c : conv_channels) {
    Conv1dGeometry g;
    g.in_channels = channels;
    g.length = length;
    g.out_channels = c;
    g.kernel = conv_kernel;
    g.stride = conv_stride;
    if (conv_padding == Padding::kSame && conv_kernel > 0) {
      g.pad_left = (conv_kernel - 1) / 2;
      g.pad_right = conv_kernel - 1 - g.pad_left;
    }
    if (c == 0 || conv_stride == 0 || g.out_length() == 0) {
      throw ConfigError(fmt::format("{}: conv kernel {} / stride {} does not fit length {}", name,
                                    conv_kernel, conv_stride, length));
    }
    channels = c;
    length = g.out_length();
  }
}

AlignmentPlan alignment_plan(std::size_t native_timesteps, std::size_t target_timesteps) {
  if (target_timesteps == 0 || native_timesteps == 0) {
    throw ConfigError("alignment_plan: timestep counts must be >= 1");
  }
  if (target_timesteps > native_timesteps) {
    throw ConfigError(fmt::format("alignment_plan: cannot upsample {} steps to {}",
                                  native_timesteps, target_timesteps));
  }
  return {native_timesteps - target_timesteps + 1, 1};
}

Var time_align(const Var& spikes, const Var& kernel, const AlignmentPlan& plan) {
  if (kernel.shape().size() != 2 || kernel.shape()[1] != plan.kernel) {
    throw DimensionError(fmt::format("time_align: kernel {} does not match plan length {}",
                                     shape_str(kernel.shape()), plan.kernel));
  }
  return temporal_conv(spikes, kernel, plan.stride);
}

namespace {

std::vector<SpikingConvLayer> build_convs(const BranchConfig& cfg, std::mt19937_64& rng) {
  std::vector<SpikingConvLayer> convs;
  std::size_t channels = 1, length = cfg.input_features;
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    convs.emplace_back(fmt::format("{}.conv{}", modality_name(cfg.modality), i), channels, length,
                       cfg.conv_channels[i], cfg.conv_kernel, cfg.conv_stride, cfg.conv_padding,
                       rng);
    channels = cfg.conv_channels[i];
    length = convs.back().geometry().out_length();
  }
  return convs;
}

std::size_t flat_width(const BranchConfig& cfg, const std::vector<SpikingConvLayer>& convs) {
  return convs.empty() ? cfg.input_features : convs.back().geometry().out_features();
}

const BranchConfig& checked(const BranchConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

Branch::Branch(const BranchConfig& cfg, std::mt19937_64& rng)
    : cfg_(checked(cfg)),
      plan_(cfg.alignment_enabled ? alignment_plan(cfg.native_timesteps, cfg.aligned_timesteps)
                                  : AlignmentPlan{}),
      convs_(build_convs(cfg_, rng)),
      linear_(fmt::format("{}.fc", modality_name(cfg.modality)), flat_width(cfg_, convs_),
              cfg.feature_width, rng),
      align_kernel_(fmt::format("{}.align", modality_name(cfg.modality)),
                    Tensor(Shape{cfg.feature_width, plan_.kernel},
                           1.0 / static_cast<double>(plan_.kernel))) {}

Var Branch::encode(Tape& tape, const Var& raw) { return encode_layers(tape, raw).back(); }

std::vector<Var> Branch::encode_layers(Tape& tape, const Var& raw) {
  const Shape& sh = raw.shape();
  if (sh.size() != 3 || sh[1] != cfg_.native_timesteps || sh[2] != cfg_.input_features) {
    throw DimensionError(fmt::format("{}: raw input {} does not match [batch x {} x {}]",
                                     modality_name(cfg_.modality), shape_str(sh),
                                     cfg_.native_timesteps, cfg_.input_features));
  }
  std::vector<Var> out;
  Var x = raw;
  for (SpikingConvLayer& conv : convs_) {
    x = conv.forward(tape, x, cfg_.lif);
    out.push_back(x);
  }
  out.push_back(linear_.forward(tape, x, cfg_.lif));
  return out;
}

Var Branch::align(Tape& tape, const Var& spikes) {
  if (!cfg_.alignment_enabled) return identity(spikes);
  return time_align(spikes, tape.bind(align_kernel_), plan_);
}

std::vector<Parameter*> Branch::parameters() {
  std::vector<Parameter*> out;
  for (SpikingConvLayer& conv : convs_)
    for (Parameter* p : conv.parameters()) out.push_back(p);
  for (Parameter* p : linear_.parameters()) out.push_back(p);
  out.push_back(&align_kernel_);
  return out;
}

}  // namespace taaf
