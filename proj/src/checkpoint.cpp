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

#include "taaf/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "binio.hpp"
#include "taaf/error.hpp"

namespace taaf {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'A', 'F'};

void put_block(std::vector<char>& out, const NamedTensor& b) {
  binio::put_string(out, b.name);
  binio::put(out, static_cast<std::uint32_t>(b.value.rank()));
  for (std::size_t d : b.value.shape()) binio::put(out, static_cast<std::uint32_t>(d));
  binio::put(out, static_cast<std::uint64_t>(b.value.size()));
  for (double v : b.value.data()) binio::put_f32(out, v);
}

[[noreturn]] void truncated(const char* what) {
  throw FormatError(fmt::format("checkpoint truncated while reading {}", what));
}

NamedTensor get_block(binio::Reader& r) {
  NamedTensor b;
  std::uint32_t ndim = 0;
  if (!r.get_string(b.name)) truncated("block name");
  if (!r.get(ndim)) truncated("block rank");
  if (ndim > 8) throw FormatError(fmt::format("checkpoint block '{}' has rank {}", b.name, ndim));
  Shape shape;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    std::uint32_t d = 0;
    if (!r.get(d)) truncated("block shape");
    shape.push_back(d);
  }
  std::uint64_t count = 0;
  if (!r.get(count)) truncated("block size");
  if (count != shape_numel(shape)) {
    throw FormatError(fmt::format("checkpoint block '{}' declares {} values for shape {}", b.name,
                                  count, shape_str(shape)));
  }
  if (r.remaining() / sizeof(float) < count) truncated("block data");
  std::vector<double> data(count);
  for (double& v : data) {
    float f = 0.0f;
    r.get(f);
    v = static_cast<double>(f);
  }
  b.value = Tensor(std::move(shape), std::move(data));
  return b;
}

}  // namespace

std::vector<char> encode_checkpoint(const Checkpoint& ck) {
  nlohmann::json meta = {
      {"train_config", nlohmann::json::parse(train_config_json(ck.config))},
      {"data_shape",
       {{"classes", ck.shape.classes},
        {"timesteps_m1", ck.shape.timesteps_m1},
        {"features_m1", ck.shape.features_m1},
        {"timesteps_m2", ck.shape.timesteps_m2},
        {"features_m2", ck.shape.features_m2}}},
  };
  std::vector<char> out(kMagic, kMagic + 4);
  binio::put(out, kCheckpointVersion);
  binio::put_string(out, meta.dump());
  binio::put(out, ck.seed);
  binio::put(out, ck.epoch);
  binio::put(out, static_cast<std::uint32_t>(ck.parameters.size() + ck.momentum.size()));
  for (const NamedTensor& b : ck.parameters) put_block(out, b);
  for (const NamedTensor& b : ck.momentum) put_block(out, b);
  return out;
}

Checkpoint decode_checkpoint(const std::vector<char>& bytes) {
  binio::Reader r(bytes);
  std::string magic;
  if (!r.get_bytes(4, magic)) truncated("magic");
  if (magic != std::string(kMagic, 4)) throw FormatError("not a checkpoint (bad magic)");
  std::uint32_t version = 0;
  if (!r.get(version)) truncated("version");
  if (version != kCheckpointVersion) {
    throw FormatError(fmt::format("checkpoint version {} unsupported (expected {})", version,
                                  kCheckpointVersion));
  }
  std::string meta_text;
  if (!r.get_string(meta_text)) truncated("config");
  Checkpoint ck;
  try {
    const nlohmann::json meta = nlohmann::json::parse(meta_text);
    ck.config = parse_train_config(meta.at("train_config").dump());
    const auto& s = meta.at("data_shape");
    ck.shape = {s.at("classes").get<std::size_t>(), s.at("timesteps_m1").get<std::size_t>(),
                s.at("features_m1").get<std::size_t>(), s.at("timesteps_m2").get<std::size_t>(),
                s.at("features_m2").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("checkpoint config malformed: {}", e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("checkpoint config invalid: {}", e.what()));
  }
  std::uint32_t blocks = 0;
  if (!r.get(ck.seed)) truncated("seed");
  if (!r.get(ck.epoch)) truncated("epoch");
  if (!r.get(blocks)) truncated("block count");
  for (std::uint32_t i = 0; i < blocks; ++i) {
    NamedTensor b = get_block(r);
    if (b.name.starts_with("momentum/")) {
      ck.momentum.push_back(std::move(b));
    } else {
      ck.parameters.push_back(std::move(b));
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(fmt::format("checkpoint has {} trailing bytes", r.remaining()));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::vector<char> bytes = encode_checkpoint(ck);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(fmt::format("cannot write checkpoint {}", path.string()));
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(fmt::format("write to {} failed", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(fmt::format("cannot read checkpoint {}", path.string()));
  const std::vector<char> bytes{std::istreambuf_iterator<char>(f), {}};
  return decode_checkpoint(bytes);
}

}  // namespace taaf
