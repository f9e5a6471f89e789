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

#include "taaf/spiking.hpp"

#include <cmath>

#include <fmt/format.h>

#include "taaf/error.hpp"

namespace taaf {

void LifParams::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError(fmt::format("tau must be in (0,1], got {}", tau));
  if (!(v_th > 0.0)) throw ConfigError(fmt::format("v_th must be > 0, got {}", v_th));
  if (!(surrogate_width > 0.0)) {
    throw ConfigError(fmt::format("surrogate_width must be > 0, got {}", surrogate_width));
  }
}

LifStep lif_step(const MembraneState& state, const Var& current, const LifParams& p) {
  if (state.u.shape() != current.shape()) {
    throw DimensionError(fmt::format("lif_step: potential {} vs current {}",
                                     shape_str(state.u.shape()), shape_str(current.shape())));
  }
  Var pre = add(scale(state.u, p.tau), current);
  Var s = spike(add_scalar(pre, -p.v_th), p.surrogate_width);
  Var post = sub(pre, mul(pre, s));
  return {MembraneState{post}, s, pre};
}

LifTrace lif_sequence(const Var& currents, const LifParams& p) {
  const Shape& sh = currents.shape();
  if (sh.size() != 3) {
    throw DimensionError(fmt::format("lif_sequence: expected [batch x T x n], got {}", shape_str(sh)));
  }
  const std::size_t batch = sh[0], steps = sh[1], n = sh[2];
  if (steps == 0) throw DomainError("lif_sequence: zero timesteps");
  Tape& tape = currents.tape();
  MembraneState state{tape.constant(Tensor(Shape{batch, n}))};
  std::vector<Var> spikes;
  spikes.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Var current = reshape(slice(currents, 1, t, 1), Shape{batch, n});
    LifStep step = lif_step(state, current, p);
    state = step.state;
    spikes.push_back(reshape(step.spikes, Shape{batch, 1, n}));
  }
  return {concat(spikes, 1), state.u};
}

double surrogate_adjoint(double v, double width) {
  return std::abs(v) < width ? 1.0 / (2.0 * width) : 0.0;
}

Var spiking_linear(const Var& spikes_in, const Var& weight, const Var& bias, const LifParams& p) {
  const Shape& sh = spikes_in.shape();
  if (sh.size() != 3 || weight.shape().size() != 2 || sh[2] != weight.shape()[1]) {
    throw DimensionError(fmt::format("spiking_linear: input {} vs weight {}", shape_str(sh),
                                     shape_str(weight.shape())));
  }
  const std::size_t batch = sh[0], steps = sh[1], out = weight.shape()[0];
  Var flat = reshape(spikes_in, Shape{batch * steps, sh[2]});
  Var current = add(matmul(flat, transpose_last(weight)), bias);
  return lif_sequence(reshape(current, Shape{batch, steps, out}), p).spikes;
}

Var spiking_conv1d(const Var& spikes_in, const Var& kernels, const Var& bias,
                   const Conv1dGeometry& geom, const LifParams& p) {
  const Shape& sh = spikes_in.shape();
  if (sh.size() != 3) {
    throw DimensionError(fmt::format("spiking_conv1d: expected [batch x T x F], got {}", shape_str(sh)));
  }
  const std::size_t batch = sh[0], steps = sh[1];
  Var flat = reshape(spikes_in, Shape{batch * steps, sh[2]});
  Var current = conv1d(flat, kernels, bias, geom);
  return lif_sequence(reshape(current, Shape{batch, steps, geom.out_features()}), p).spikes;
}

Var readout_accumulate(const Var& currents) { return identity(currents); }

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng,
                      double gain) {
  const double a = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

SpikingConvLayer::SpikingConvLayer(std::string name, std::size_t in_channels, std::size_t length,
                                   std::size_t out_channels, std::size_t kernel,
                                   std::size_t stride, Padding padding, std::mt19937_64& rng) {
  geom_.in_channels = in_channels;
  geom_.length = length;
  geom_.out_channels = out_channels;
  geom_.kernel = kernel;
  geom_.stride = stride;
  if (padding == Padding::kSame && kernel > 0) {
    geom_.pad_left = (kernel - 1) / 2;
    geom_.pad_right = kernel - 1 - geom_.pad_left;
  }
  if (stride == 0 || kernel == 0 || geom_.out_length() == 0) {
    throw ConfigError(fmt::format("{}: kernel {} / stride {} invalid for length {}", name, kernel,
                                  stride, length));
  }
  weight_ = Parameter(name + ".weight",
                      glorot_uniform(Shape{out_channels, in_channels, kernel}, in_channels * kernel,
                                     out_channels * kernel, rng, kSpikingInitGain));
  bias_ = Parameter(name + ".bias", Tensor(Shape{out_channels}));
}

Var SpikingConvLayer::forward(Tape& tape, const Var& spikes_in, const LifParams& p) {
  return spiking_conv1d(spikes_in, tape.bind(weight_), tape.bind(bias_), geom_, p);
}

SpikingLinearLayer::SpikingLinearLayer(std::string name, std::size_t in_features,
                                       std::size_t out_features, std::mt19937_64& rng) {
  if (in_features == 0 || out_features == 0) {
    throw ConfigError(fmt::format("{}: zero-width linear layer", name));
  }
  weight_ = Parameter(name + ".weight", glorot_uniform(Shape{out_features, in_features},
                                                       in_features, out_features, rng,
                                                       kSpikingInitGain));
  bias_ = Parameter(name + ".bias", Tensor(Shape{out_features}));
}

Var SpikingLinearLayer::forward(Tape& tape, const Var& spikes_in, const LifParams& p) {
  return spiking_linear(spikes_in, tape.bind(weight_), tape.bind(bias_), p);
}

}  // namespace taaf
