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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "taaf/autograd.hpp"
#include "taaf/branch.hpp"
#include "taaf/fusion.hpp"
#include "taaf/loss.hpp"

namespace taaf {

struct ModelConfig {
  BranchConfig m1;
  BranchConfig m2;
  std::size_t classes = 2;
  std::size_t attention_width = 16;
  FusionKind fusion = FusionKind::kConcatenation;
  bool attention_enabled = true;

  void validate() const;
};

// Everything one forward pass produces, indexed by Pathway where relevant.
struct ForwardPass {
  Var spikes_m1;  // [batch x T_m1 x D_m1]
  Var spikes_m2;
  Var h_m1;  // aligned, [batch x T x D_m1]
  Var h_m2;
  Var fused;
  std::array<Var, kNumPathways> logits;            // [batch x T x C]
  std::array<Var, kNumPathways> alpha;             // batch mean, [T]
  std::array<Var, kNumPathways> alpha_per_sample;  // [batch x T]

  const Var& logits_of(Pathway p) const { return logits[static_cast<std::size_t>(p)]; }
  const Var& alpha_of(Pathway p) const { return alpha[static_cast<std::size_t>(p)]; }
};

class TaafModel {
 public:
  TaafModel(const ModelConfig& cfg, std::uint64_t seed);

  // raw_*: [batch x T_u x F_u].
  ForwardPass forward(Tape& tape, const Tensor& raw_m1, const Tensor& raw_m2);
  // Alignment onwards, starting from given spike trains.
  ForwardPass forward_from_spikes(Tape& tape, const Var& spikes_m1, const Var& spikes_m2);

  const ModelConfig& config() const { return cfg_; }
  Branch& branch(Modality m) { return m == Modality::kM1 ? m1_ : m2_; }
  SharedClassifier& classifier() { return classifier_; }
  AttentionHead& head(Pathway p) { return heads_[static_cast<std::size_t>(p)]; }

  // Fixed order; names are unique.
  std::vector<Parameter*> parameters();
  std::size_t parameter_count();

 private:
  ModelConfig cfg_;
  Branch m1_;
  Branch m2_;
  SharedClassifier classifier_;
  std::array<AttentionHead, kNumPathways> heads_;
};

// The per-iteration objective: pathway losses, modulation state and total.
struct Objective {
  Var total;
  std::array<Var, kNumPathways> pathway_loss;
  ModulationState modulation;
};

Objective build_objective(const ForwardPass& pass, std::span<const int> labels,
                          const LossConfig& cfg, bool modulation_active);

}  // namespace taaf
