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

#include "taaf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace taaf {

namespace {

double rel_err(double analytic, double numeric) {
  const double e = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
  return std::isnan(e) ? std::numeric_limits<double>::quiet_NaN() : e;
}

double fold_max(double acc, double e) {
  if (std::isnan(acc) || std::isnan(e)) return std::numeric_limits<double>::quiet_NaN();
  return std::max(acc, e);
}

}  // namespace

double finite_difference_check(const ScalarFn& f, const Tensor& x, double eps) {
  Tensor analytic;
  {
    Tape tape;
    Var leaf = tape.leaf(x);
    Var out = f(tape, leaf);
    tape.backward(out);
    analytic = leaf.grad();
  }
  auto eval = [&](const Tensor& at) {
    Tape tape;
    Var leaf = tape.leaf(at, false);
    return f(tape, leaf).value().item();
  };
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = eval(probe);
    probe[i] = orig - eps;
    const double down = eval(probe);
    probe[i] = orig;
    worst = fold_max(worst, rel_err(analytic[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

double finite_difference_check(const std::function<Var(Tape&)>& loss,
                               const std::vector<Parameter*>& params, double eps) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var out = loss(tape);
    tape.backward(out);
    tape.export_grads();
  }
  auto eval = [&] {
    Tape tape;
    return loss(tape).value().item();
  };
  double worst = 0.0;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const double up = eval();
      p->value[i] = orig - eps;
      const double down = eval();
      p->value[i] = orig;
      worst = fold_max(worst, rel_err(p->grad[i], (up - down) / (2.0 * eps)));
    }
  }
  return worst;
}

}  // namespace taaf
