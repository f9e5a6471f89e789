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

#include <functional>
#include <vector>

#include "taaf/autograd.hpp"

namespace taaf {

// Builds a scalar from a leaf on a fresh tape.
using ScalarFn = std::function<Var(Tape&, const Var&)>;

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
// NaN anywhere makes the result NaN.
double finite_difference_check(const ScalarFn& f, const Tensor& x, double eps = 1e-6);

// Same check for a model whose scalar depends on a set of parameters; each
// parameter is perturbed in place and restored. `loss` must rebuild the whole
// graph on the tape it is given.
double finite_difference_check(const std::function<Var(Tape&)>& loss,
                               const std::vector<Parameter*>& params, double eps = 1e-6);

}  // namespace taaf
