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

// Temporal adaptive balanced fusion loss.
//
// Per pathway u in {m1, m2, f}:
//   core_u = -sum_t alpha_u(t) * mean_batch log softmax(O_u(t))[y]
//   mse_u  = mean_{t, batch, class} (O_u(t) - phi)^2
//   L_u    = (1 - lambda) core_u + lambda mse_u
// Modulation (per batch, off the tape):
//   s_u^i  = softmax(sum_t alpha_u(t) O_u^i(t))[y_i]
//   rho_m1 = sum_i s_m1^i / sum_i s_m2^i,  rho_m2 = 1 / rho_m1
//   k_u    = 1 - tanh(gamma_u rho_u) if rho_u > 1 else 1
// Total:  L = beta (k_m1 L_m1 + k_m2 L_m2) + L_f

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "taaf/autograd.hpp"

namespace taaf {

// How per-timestep unimodal logits are collapsed before scoring.
enum class ScoreAggregation { kAttention, kMean };

struct LossConfig {
  double lambda = 0.05;
  double phi = 1.0;
  double gamma_m1 = 1.0;
  double gamma_m2 = 1.0;
  double beta = 1.0;
  std::size_t modulation_end_epoch = 0;
  ScoreAggregation score_aggregation = ScoreAggregation::kAttention;

  void validate() const;
};

// logits: [batch x T x C]; alpha: [T]; targets: one class index per sample.
Var agl_core(const Var& logits, std::span<const int> targets, const Var& alpha);
Var mse_regularizer(const Var& logits, double phi);
Var agl_loss(const Var& logits, std::span<const int> targets, const Var& alpha, double lambda,
             double phi);

// True-class probability per sample of the time-aggregated logits.
std::vector<double> modality_scores(const Tensor& logits, const Tensor& alpha,
                                    std::span<const int> labels,
                                    ScoreAggregation agg = ScoreAggregation::kAttention);

struct ContributionRatios {
  double rho_m1 = 1.0;
  double rho_m2 = 1.0;
};

ContributionRatios contribution_ratios(std::span<const double> s_m1, std::span<const double> s_m2);

// 1 - tanh(gamma rho) for rho > 1, otherwise 1.
double modulation_factor(double rho, double gamma);

struct ModulationState {
  std::vector<double> s_m1;
  std::vector<double> s_m2;
  double rho_m1 = 1.0;
  double rho_m2 = 1.0;
  double k_m1 = 1.0;
  double k_m2 = 1.0;
  bool active = false;

  // Scores, ratios and factors for one batch. When inactive both factors
  // are 1 but scores and ratios are still reported.
  static ModulationState compute(const Tensor& logits_m1, const Tensor& alpha_m1,
                                 const Tensor& logits_m2, const Tensor& alpha_m2,
                                 std::span<const int> labels, const LossConfig& cfg, bool active);
};

Var total_loss(const Var& l_m1, const Var& l_m2, const Var& l_f, double k_m1, double k_m2,
               double beta, bool modulation_active);
double total_loss(double l_m1, double l_m2, double l_f, double k_m1, double k_m2, double beta,
                  bool modulation_active);

}  // namespace taaf
