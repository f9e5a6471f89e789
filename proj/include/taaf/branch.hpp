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

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "taaf/autograd.hpp"
#include "taaf/spiking.hpp"

namespace taaf {

enum class Modality { kM1 = 0, kM2 = 1 };

const char* modality_name(Modality m);

// One modality's encoder stack plus its time-alignment kernel.
struct BranchConfig {
  Modality modality = Modality::kM1;
  std::size_t native_timesteps = 1;  // T_u
  std::size_t input_features = 1;    // F_u, single input channel
  std::vector<std::size_t> conv_channels = {4, 8};
  std::size_t conv_kernel = 3;
  std::size_t conv_stride = 1;
  Padding conv_padding = Padding::kValid;
  std::size_t feature_width = 32;  // D_u, width of the spiking linear layer
  LifParams lif;
  std::size_t aligned_timesteps = 1;  // common T after alignment
  bool alignment_enabled = true;

  // Throws ConfigError on any inconsistency, including an alignment that
  // cannot reach aligned_timesteps.
  void validate() const;
};

struct AlignmentPlan {
  std::size_t kernel = 1;
  std::size_t stride = 1;

  friend bool operator==(const AlignmentPlan&, const AlignmentPlan&) = default;
};

// Smallest stride-1 valid convolution taking native steps to target steps:
// kernel = native - target + 1. Downsampling only.
AlignmentPlan alignment_plan(std::size_t native_timesteps, std::size_t target_timesteps);

// Depthwise temporal convolution; kernel is [D x plan.kernel]. Output is real
// valued, not re-thresholded.
Var time_align(const Var& spikes, const Var& kernel, const AlignmentPlan& plan);

class Branch {
 public:
  Branch(const BranchConfig& cfg, std::mt19937_64& rng);

  // raw: [batch x T_u x F_u] -> binary spikes [batch x T_u x D_u].
  Var encode(Tape& tape, const Var& raw);
  // Output spikes of every encoder layer in order; back() is encode().
  std::vector<Var> encode_layers(Tape& tape, const Var& raw);
  // spikes: [batch x T_u x D_u] -> features [batch x T x D_u].
  Var align(Tape& tape, const Var& spikes);

  const BranchConfig& config() const { return cfg_; }
  const AlignmentPlan& plan() const { return plan_; }
  std::size_t feature_width() const { return cfg_.feature_width; }
  const std::vector<SpikingConvLayer>& conv_layers() const { return convs_; }
  const SpikingLinearLayer& linear_layer() const { return linear_; }
  Parameter& align_kernel() { return align_kernel_; }

  std::vector<Parameter*> parameters();

 private:
  BranchConfig cfg_;
  AlignmentPlan plan_;
  std::vector<SpikingConvLayer> convs_;
  SpikingLinearLayer linear_;
  Parameter align_kernel_;
};

}  // namespace taaf
