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

// Binary checkpoint, little-endian:
//   "TAAF" | u32 version | str config_json | u64 seed | u32 epoch |
//   u32 block count | blocks
// str is a u32 byte length followed by the bytes; a block is
//   str name | u32 ndim | u32 dims[ndim] | u64 count | f32 data[count]
// Optimizer velocities are stored as blocks named "momentum/<param>".

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "taaf/tensor.hpp"
#include "taaf/train.hpp"

namespace taaf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  TrainConfig config;
  DataShape shape;
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
  std::vector<NamedTensor> parameters;
  std::vector<NamedTensor> momentum;
};

std::vector<char> encode_checkpoint(const Checkpoint& ck);
// FormatError on bad magic, version mismatch, truncation or trailing bytes.
Checkpoint decode_checkpoint(const std::vector<char>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace taaf
