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

// Cross-modal fusion, the shared classifier and its per-modality views, and
// the temporal attention scores computed from per-timestep logits.
//
// The classifier weight W has shape [(D_m1 + D_m2) x C]. Rows [0, D_m1) form
// the m1 block and the rest the m2 block; unimodal logits are h_u W_u + b/2,
// so under concatenation O_m1 + O_m2 == O_f.

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "taaf/autograd.hpp"
#include "taaf/branch.hpp"

namespace taaf {

enum class FusionKind { kConcatenation, kSummation };

const char* fusion_name(FusionKind kind);
FusionKind parse_fusion(const std::string& s);

// Pathways that carry their own attention head and loss term.
enum class Pathway { kM1 = 0, kM2 = 1, kFused = 2 };
inline constexpr std::size_t kNumPathways = 3;
const char* pathway_name(Pathway p);

// [batch x T x D1], [batch x T x D2] -> [batch x T x D_f].
Var fuse(const Var& h_m1, const Var& h_m2, FusionKind kind);

// Per-timestep affine readout on [batch x T x D] features -> [batch x T x C].
// For summation the effective weight is W_m1 + W_m2.
Var classify_multimodal(const Var& fused, const Var& weight, const Var& bias, std::size_t d_m1,
                        FusionKind kind);
Var classify_unimodal(const Var& h, const Var& weight, const Var& bias, std::size_t d_m1,
                      Modality u);

// Per-sample temporal attention: for each sample, Q = O W_Q, K = O W_K,
// A = softmax(Q K^T / sqrt(C_att)) row-wise, alpha(t) = mean_i A[i, t].
// logits: [batch x T x C], heads: [C x C_att] -> [batch x T].
Var temporal_attention_per_sample(const Var& logits, const Var& w_query, const Var& w_key);
// Batch mean of the per-sample scores -> [T].
Var temporal_attention(const Var& logits, const Var& w_query, const Var& w_key);

// O'(t) = alpha(t) O(t). alpha is [T] (shared) or [batch x T] (per sample).
Var attention_weighted_logits(const Var& logits, const Var& alpha);

// Time-aggregated decision logits sum_t alpha(t) O(t) -> [batch x C].
Tensor aggregate_logits(const Tensor& logits, const Tensor& alpha);
// argmax per row; ties resolve to the lowest class index.
std::vector<int> argmax_rows(const Tensor& rows);

class SharedClassifier {
 public:
  SharedClassifier(std::size_t d_m1, std::size_t d_m2, std::size_t classes, std::mt19937_64& rng);

  Var multimodal(Tape& tape, const Var& fused, FusionKind kind);
  Var unimodal(Tape& tape, const Var& h, Modality u);

  std::size_t d_m1() const { return d_m1_; }
  std::size_t d_m2() const { return d_m2_; }
  std::size_t classes() const { return weight_.value.extent(1); }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  std::size_t d_m1_;
  std::size_t d_m2_;
  Parameter weight_;
  Parameter bias_;
};

class AttentionHead {
 public:
  // W_Q starts at zero so attention is uniform at initialization; W_K is
  // Glorot-initialised so that dL/dW_Q is not identically zero.
  AttentionHead(std::string name, std::size_t classes, std::size_t width, std::mt19937_64& rng);

  Var scores(Tape& tape, const Var& logits);
  Var scores_per_sample(Tape& tape, const Var& logits);

  std::size_t width() const { return w_query_.value.extent(1); }
  Parameter& w_query() { return w_query_; }
  Parameter& w_key() { return w_key_; }
  std::vector<Parameter*> parameters() { return {&w_query_, &w_key_}; }

 private:
  Parameter w_query_;
  Parameter w_key_;
};

}  // namespace taaf
