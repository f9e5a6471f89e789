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

// Operation counting and a linear energy model.
//
// A layer fed by binary spikes costs one accumulate per incoming spike per
// outgoing connection (a synop). A layer fed by real values costs dense
// multiply-accumulates in both the spiking network and its dense twin. The
// dense twin pays MACs for every connection at every timestep.
//
// Counted inference path: encoder layers of both branches, the alignment
// convolutions, and the fused classifier plus fused attention head. The
// unimodal heads exist only for training and are not counted.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taaf/dataset.hpp"
#include "taaf/model.hpp"

namespace taaf {

struct LayerOps {
  std::string name;
  bool spiking_input = false;
  std::uint64_t synops = 0;    // spiking network, spike-driven accumulates
  std::uint64_t snn_macs = 0;  // spiking network, real-valued layers
  std::uint64_t ann_macs = 0;  // dense twin
};

struct OpCounts {
  std::uint64_t synops = 0;
  std::uint64_t snn_macs = 0;
  std::uint64_t ann_macs = 0;
  std::vector<LayerOps> layers;

  void add(const LayerOps& layer);
  OpCounts operator+(const OpCounts& other) const;
};

struct EnergyModel {
  double e_ac = 0.9e-12;   // joules per accumulate
  double e_mac = 4.6e-12;  // joules per multiply-accumulate

  void validate() const;
};

struct EnergyEstimate {
  double e_snn = 0.0;
  double e_ann = 0.0;
  double ratio = 0.0;  // e_snn / e_ann, 0 when e_ann is 0
};

// Connectivity of a conv layer: fan_out[c * length + i] is the number of
// output units fed by input (c, i), accounting for borders and stride.
std::vector<std::uint64_t> conv_fan_out(const Conv1dGeometry& g);
std::uint64_t conv_connections(const Conv1dGeometry& g);

// Runs inference over ds. The first encoder layer is spike driven only when
// the dataset is rate encoded.
OpCounts count_ops(TaafModel& model, const Dataset& ds);

EnergyEstimate estimate_energy(const OpCounts& counts, const EnergyModel& model = {});

}  // namespace taaf
