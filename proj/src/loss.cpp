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

#include "taaf/loss.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "taaf/error.hpp"
#include "taaf/fusion.hpp"

namespace taaf {

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError(fmt::format("lambda {} not in [0,1]", lambda));
  if (!(gamma_m1 > 0.0) || !(gamma_m2 > 0.0)) throw ConfigError("gamma must be > 0");
  if (!(beta >= 0.0)) throw ConfigError(fmt::format("beta {} must be >= 0", beta));
  if (!std::isfinite(phi)) throw ConfigError("phi must be finite");
}

namespace {

void check_targets(std::span<const int> targets, std::size_t batch, std::size_t classes) {
  if (targets.size() != batch) {
    throw DimensionError(fmt::format("{} targets for a batch of {}", targets.size(), batch));
  }
  for (int y : targets) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DomainError(fmt::format("class index {} outside [0, {})", y, classes));
    }
  }
}

}  // namespace

Var agl_core(const Var& logits, std::span<const int> targets, const Var& alpha) {
  const Shape& sh = logits.shape();
  if (sh.size() != 3) throw DimensionError("agl_core: expected [batch x T x C] logits");
  const std::size_t batch = sh[0], steps = sh[1], classes = sh[2];
  if (alpha.shape() != Shape{steps}) {
    throw DimensionError(fmt::format("agl_core: alpha {} for {} steps", shape_str(alpha.shape()), steps));
  }
  check_targets(targets, batch, classes);
  Tensor onehot(sh);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < steps; ++t)
      onehot[(b * steps + t) * classes + static_cast<std::size_t>(targets[b])] = 1.0;
  Tape& tape = logits.tape();
  Var picked = sum(mul(log_softmax(logits, 2), tape.constant(std::move(onehot))), 2);  // [B x T]
  Var per_step = mean(picked, 0);                                                     // [T]
  return scale(sum_all(mul(per_step, alpha)), -1.0);
}

Var mse_regularizer(const Var& logits, double phi) {
  if (logits.shape().size() != 3 || logits.shape()[1] == 0) {
    throw DomainError("mse_regularizer: expected [batch x T x C] with T >= 1");
  }
  return mean_all(square(add_scalar(logits, -phi)));
}

Var agl_loss(const Var& logits, std::span<const int> targets, const Var& alpha, double lambda,
             double phi) {
  Var core = agl_core(logits, targets, alpha);
  if (lambda == 0.0) return core;
  Var reg = mse_regularizer(logits, phi);
  if (lambda == 1.0) return reg;
  return add(scale(core, 1.0 - lambda), scale(reg, lambda));
}

std::vector<double> modality_scores(const Tensor& logits, const Tensor& alpha,
                                    std::span<const int> labels, ScoreAggregation agg) {
  const Shape& sh = logits.shape();
  if (sh.size() != 3) throw DimensionError("modality_scores: expected [batch x T x C] logits");
  const std::size_t batch = sh[0], steps = sh[1], classes = sh[2];
  check_targets(labels, batch, classes);
  const Tensor weights =
      agg == ScoreAggregation::kMean ? Tensor(Shape{steps}, 1.0 / static_cast<double>(steps)) : alpha;
  const Tensor agg_logits = aggregate_logits(logits, weights);
  std::vector<double> scores(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = agg_logits.data().data() + b * classes;
    double mx = row[0];
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    scores[b] = std::exp(row[labels[b]] - mx) / z;
  }
  return scores;
}

ContributionRatios contribution_ratios(std::span<const double> s_m1, std::span<const double> s_m2) {
  if (s_m1.empty() || s_m1.size() != s_m2.size()) {
    throw DomainError("contribution_ratios: score batches must be nonempty and equal length");
  }
  double sum1 = 0.0, sum2 = 0.0;
  for (double v : s_m1) sum1 += v;
  for (double v : s_m2) sum2 += v;
  if (!(sum1 > 0.0) || !(sum2 > 0.0)) {
    throw NumericError(fmt::format("contribution_ratios: nonpositive score sum ({}, {})", sum1, sum2));
  }
  return {sum1 / sum2, sum2 / sum1};
}

double modulation_factor(double rho, double gamma) {
  return rho > 1.0 ? 1.0 - std::tanh(gamma * rho) : 1.0;
}

ModulationState ModulationState::compute(const Tensor& logits_m1, const Tensor& alpha_m1,
                                         const Tensor& logits_m2, const Tensor& alpha_m2,
                                         std::span<const int> labels, const LossConfig& cfg,
                                         bool active) {
  ModulationState st;
  st.active = active;
  st.s_m1 = modality_scores(logits_m1, alpha_m1, labels, cfg.score_aggregation);
  st.s_m2 = modality_scores(logits_m2, alpha_m2, labels, cfg.score_aggregation);
  const ContributionRatios r = contribution_ratios(st.s_m1, st.s_m2);
  st.rho_m1 = r.rho_m1;
  st.rho_m2 = r.rho_m2;
  if (active) {
    st.k_m1 = modulation_factor(st.rho_m1, cfg.gamma_m1);
    st.k_m2 = modulation_factor(st.rho_m2, cfg.gamma_m2);
  }
  return st;
}

Var total_loss(const Var& l_m1, const Var& l_m2, const Var& l_f, double k_m1, double k_m2,
               double beta, bool modulation_active) {
  if (!modulation_active) k_m1 = k_m2 = 1.0;
  Var uni = add(scale(l_m1, k_m1), scale(l_m2, k_m2));
  return add(scale(uni, beta), l_f);
}

double total_loss(double l_m1, double l_m2, double l_f, double k_m1, double k_m2, double beta,
                  bool modulation_active) {
  if (!modulation_active) k_m1 = k_m2 = 1.0;
  return beta * (k_m1 * l_m1 + k_m2 * l_m2) + l_f;
}

}  // namespace taaf
