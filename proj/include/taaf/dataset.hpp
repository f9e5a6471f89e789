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

// Synthetic two-modality classification data.
//
// Each class owns one unit-Frobenius-norm Gaussian template per modality of
// shape [T_u x F_u]; a sample is snr_u * template + noise_std * N(0, 1).
// Unequal snr values make one modality dominant.
//
// On disk a split is a directory:
//   meta.json   counts, shapes, class names, encoding, format version
//   m1.bin      float32 little-endian, [N x T_m1 x F_m1]
//   m2.bin      float32 little-endian, [N x T_m2 x F_m2]
//   labels.bin  int32 little-endian, [N]
// and a generated dataset root holds train/ and test/ split directories.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "taaf/tensor.hpp"

namespace taaf {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

enum class Encoding { kCurrent, kRate };

const char* encoding_name(Encoding e);
Encoding parse_encoding(const std::string& s);

struct SynthConfig {
  std::size_t classes = 4;
  std::size_t samples_per_class = 100;
  std::size_t features_m1 = 16;
  std::size_t features_m2 = 16;
  std::size_t timesteps_m1 = 4;
  std::size_t timesteps_m2 = 3;
  double snr_m1 = 3.0;
  double snr_m2 = 1.0;
  double noise_std = 1.0;
  std::uint64_t seed = 1;
  Encoding encoding = Encoding::kCurrent;
  double rate_scale = 1.0;
  double train_fraction = 0.8;

  void validate() const;

  // snr 3:1, T 4 vs 3.
  static SynthConfig imbalanced_a();
  // snr 1:1, T 5 vs 5.
  static SynthConfig balanced();
};

// Flat JSON object with the SynthConfig field names; "recipe" selects a
// preset ("imbalanced-a" or "balanced") that the other keys then override.
// Unknown keys throw ConfigError.
SynthConfig parse_synth_config(const std::string& json_text);
SynthConfig load_synth_config(const std::filesystem::path& path);

struct Dataset {
  std::string split;
  std::size_t classes = 0;
  std::vector<std::string> class_names;
  Encoding encoding = Encoding::kCurrent;
  Tensor m1;  // [N x T_m1 x F_m1], float32-representable values
  Tensor m2;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t timesteps_m1() const { return m1.extent(1); }
  std::size_t timesteps_m2() const { return m2.extent(1); }
  std::size_t features_m1() const { return m1.extent(2); }
  std::size_t features_m2() const { return m2.extent(2); }

  // Rows in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct DatasetSplits {
  Dataset train;
  Dataset test;
};

// Deterministic in cfg.seed. Each class is split train/test separately so
// both splits stay class balanced.
DatasetSplits generate(const SynthConfig& cfg);
// generate() followed by writing <out>/train and <out>/test.
DatasetSplits generate_to_disk(const SynthConfig& cfg, const std::filesystem::path& out);

// Pass-through of real-valued currents.
Tensor encode_current(const Tensor& raw);
// Bernoulli(clamp(v * scale, 0, 1)) spikes.
Tensor encode_rate(const Tensor& raw, double scale, std::mt19937_64& rng);

void save_split(const Dataset& ds, const std::filesystem::path& dir);
// Throws FormatError naming the offending file on any mismatch.
Dataset load_split(const std::filesystem::path& dir);
DatasetSplits load_dataset(const std::filesystem::path& root);

}  // namespace taaf
