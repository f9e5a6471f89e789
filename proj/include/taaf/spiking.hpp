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

// Leaky integrate-and-fire dynamics on the autograd tape.
//
//   pre(t)   = tau * u(t-1) + I(t)
//   s(t)     = Heaviside(pre(t) - v_th)        (spike at exactly v_th)
//   u(t)     = pre(t) * (1 - s(t))             (hard reset to 0)
//
// The Heaviside node's backward uses the rectangular surrogate; the reset
// path is differentiated like any other product.

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "taaf/autograd.hpp"

namespace taaf {

struct LifParams {
  double tau = 0.5;
  double v_th = 1.0;
  double surrogate_width = 0.5;

  // Throws ConfigError unless tau in (0,1], v_th > 0, width > 0.
  void validate() const;
};

struct MembraneState {
  Var u;  // [batch x neurons]
};

struct LifStep {
  MembraneState state;  // post-reset potential
  Var spikes;
  Var pre_potential;
};

LifStep lif_step(const MembraneState& state, const Var& current, const LifParams& p);

struct LifTrace {
  Var spikes;           // [batch x T x n]
  Var final_potential;  // [batch x n], post-reset u(T)
};

// Runs lif_step over axis 1 of `currents` starting from u = 0.
LifTrace lif_sequence(const Var& currents, const LifParams& p);

// dTheta/dv used by the spike node's backward pass.
double surrogate_adjoint(double v, double width);

// Per-timestep affine map I(t) = x(t) W^T + b followed by LIF dynamics.
// spikes_in: [batch x T x in], weight: [out x in], bias: [out].
Var spiking_linear(const Var& spikes_in, const Var& weight, const Var& bias, const LifParams& p);

// Per-timestep 1-D convolution along the feature axis followed by LIF.
// spikes_in: [batch x T x in_channels*length].
Var spiking_conv1d(const Var& spikes_in, const Var& kernels, const Var& bias,
                   const Conv1dGeometry& geom, const LifParams& p);

// Non-spiking readout: per-timestep currents pass through unchanged.
Var readout_accumulate(const Var& currents);

// uniform(-a, a) with a = gain * sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng,
                      double gain = 1.0);

// Gain applied to Glorot init in spiking layers. Plain Glorot leaves the
// second and later layers nearly silent at v_th = 1; a gain of 3 gives
// initial firing rates around 10-30%.
inline constexpr double kSpikingInitGain = 3.0;

enum class Padding { kValid, kSame };

class SpikingConvLayer {
 public:
  SpikingConvLayer(std::string name, std::size_t in_channels, std::size_t length,
                   std::size_t out_channels, std::size_t kernel, std::size_t stride,
                   Padding padding, std::mt19937_64& rng);

  Var forward(Tape& tape, const Var& spikes_in, const LifParams& p);
  const Conv1dGeometry& geometry() const { return geom_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  Conv1dGeometry geom_;
  Parameter weight_;
  Parameter bias_;
};

class SpikingLinearLayer {
 public:
  SpikingLinearLayer(std::string name, std::size_t in_features, std::size_t out_features,
                     std::mt19937_64& rng);

  Var forward(Tape& tape, const Var& spikes_in, const LifParams& p);
  std::size_t in_features() const { return weight_.value.extent(1); }
  std::size_t out_features() const { return weight_.value.extent(0); }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  Parameter weight_;
  Parameter bias_;
};

}  // namespace taaf
