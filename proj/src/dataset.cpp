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

#include "taaf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "binio.hpp"
#include "taaf/error.hpp"

namespace taaf {

namespace fs = std::filesystem;
using nlohmann::json;

const char* encoding_name(Encoding e) { return e == Encoding::kCurrent ? "current" : "rate"; }

Encoding parse_encoding(const std::string& s) {
  if (s == "current") return Encoding::kCurrent;
  if (s == "rate") return Encoding::kRate;
  throw ConfigError(fmt::format("unknown encoding '{}'", s));
}

void SynthConfig::validate() const {
  if (classes < 2) throw ConfigError("synth: need at least two classes");
  if (samples_per_class < 2) throw ConfigError("synth: need at least two samples per class");
  if (features_m1 == 0 || features_m2 == 0) throw ConfigError("synth: zero feature width");
  if (timesteps_m1 == 0 || timesteps_m2 == 0) throw ConfigError("synth: timesteps must be >= 1");
  if (!(snr_m1 >= 0.0) || !(snr_m2 >= 0.0)) throw ConfigError("synth: snr must be >= 0");
  if (!(noise_std >= 0.0)) throw ConfigError("synth: noise_std must be >= 0");
  if (!(rate_scale > 0.0)) throw ConfigError("synth: rate_scale must be > 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("synth: train_fraction must be in (0,1)");
  }
}

SynthConfig SynthConfig::imbalanced_a() {
  SynthConfig c;
  c.snr_m1 = 3.0;
  c.snr_m2 = 1.0;
  c.timesteps_m1 = 4;
  c.timesteps_m2 = 3;
  return c;
}

SynthConfig SynthConfig::balanced() {
  SynthConfig c;
  c.snr_m1 = 2.0;
  c.snr_m2 = 2.0;
  c.timesteps_m1 = 5;
  c.timesteps_m2 = 5;
  return c;
}

namespace {

std::size_t json_size(const json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw ConfigError(fmt::format("'{}' must be a non-negative integer", key));
  return v.get<std::size_t>();
}

double json_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", key));
  return v.get<double>();
}

}  // namespace

SynthConfig parse_synth_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("synth config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ConfigError("synth config must be a JSON object");
  SynthConfig c;
  if (doc.contains("recipe")) {
    if (!doc["recipe"].is_string()) throw ConfigError("'recipe' must be a string");
    const std::string r = doc["recipe"].get<std::string>();
    if (r == "imbalanced-a") {
      c = SynthConfig::imbalanced_a();
    } else if (r == "balanced") {
      c = SynthConfig::balanced();
    } else {
      throw ConfigError(fmt::format("unknown recipe '{}'", r));
    }
  }
  for (const auto& [key, v] : doc.items()) {
    if (key == "recipe") continue;
    if (key == "classes") c.classes = json_size(v, key);
    else if (key == "samples_per_class") c.samples_per_class = json_size(v, key);
    else if (key == "features_m1") c.features_m1 = json_size(v, key);
    else if (key == "features_m2") c.features_m2 = json_size(v, key);
    else if (key == "timesteps_m1") c.timesteps_m1 = json_size(v, key);
    else if (key == "timesteps_m2") c.timesteps_m2 = json_size(v, key);
    else if (key == "snr_m1") c.snr_m1 = json_real(v, key);
    else if (key == "snr_m2") c.snr_m2 = json_real(v, key);
    else if (key == "noise_std") c.noise_std = json_real(v, key);
    else if (key == "seed") c.seed = json_size(v, key);
    else if (key == "rate_scale") c.rate_scale = json_real(v, key);
    else if (key == "train_fraction") c.train_fraction = json_real(v, key);
    else if (key == "encoding") {
      if (!v.is_string()) throw ConfigError("'encoding' must be a string");
      c.encoding = parse_encoding(v.get<std::string>());
    } else {
      throw ConfigError(fmt::format("unknown synth config key '{}'", key));
    }
  }
  c.validate();
  return c;
}

SynthConfig load_synth_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError(fmt::format("cannot read synth config {}", path.string()));
  return parse_synth_config(std::string(std::istreambuf_iterator<char>(f), {}));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.split = split;
  out.classes = classes;
  out.class_names = class_names;
  out.encoding = encoding;
  const std::size_t row1 = m1.size() / std::max<std::size_t>(1, size());
  const std::size_t row2 = m2.size() / std::max<std::size_t>(1, size());
  std::vector<double> d1, d2;
  d1.reserve(indices.size() * row1);
  d2.reserve(indices.size() * row2);
  for (std::size_t i : indices) {
    if (i >= size()) throw DimensionError(fmt::format("subset index {} >= {}", i, size()));
    d1.insert(d1.end(), m1.data().begin() + i * row1, m1.data().begin() + (i + 1) * row1);
    d2.insert(d2.end(), m2.data().begin() + i * row2, m2.data().begin() + (i + 1) * row2);
    out.labels.push_back(labels[i]);
  }
  out.m1 = Tensor(Shape{indices.size(), m1.extent(1), m1.extent(2)}, std::move(d1));
  out.m2 = Tensor(Shape{indices.size(), m2.extent(1), m2.extent(2)}, std::move(d2));
  return out;
}

Tensor encode_current(const Tensor& raw) { return raw; }

Tensor encode_rate(const Tensor& raw, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor out(raw.shape());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double p = std::clamp(raw[i] * scale, 0.0, 1.0);
    // One draw per element keeps the stream aligned regardless of values.
    const double u = unit(rng);
    out[i] = u < p ? 1.0 : 0.0;
  }
  return out;
}

namespace {

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Tensor unit_template(std::size_t steps, std::size_t features, std::mt19937_64& rng,
                     std::normal_distribution<double>& normal) {
  Tensor t(Shape{steps, features});
  double norm = 0.0;
  for (double& v : t.data()) {
    v = normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : t.data()) v /= norm;
  return t;
}

}  // namespace

DatasetSplits generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Tensor> tmpl_m1, tmpl_m2;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    tmpl_m1.push_back(unit_template(cfg.timesteps_m1, cfg.features_m1, rng, normal));
    tmpl_m2.push_back(unit_template(cfg.timesteps_m2, cfg.features_m2, rng, normal));
  }

  const std::size_t n = cfg.classes * cfg.samples_per_class;
  const std::size_t row1 = cfg.timesteps_m1 * cfg.features_m1;
  const std::size_t row2 = cfg.timesteps_m2 * cfg.features_m2;
  Dataset all;
  all.classes = cfg.classes;
  for (std::size_t c = 0; c < cfg.classes; ++c) all.class_names.push_back(fmt::format("class{}", c));
  all.encoding = cfg.encoding;
  all.m1 = Tensor(Shape{n, cfg.timesteps_m1, cfg.features_m1});
  all.m2 = Tensor(Shape{n, cfg.timesteps_m2, cfg.features_m2});
  all.labels.resize(n);
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
      const std::size_t row = c * cfg.samples_per_class + i;
      all.labels[row] = static_cast<int>(c);
      for (std::size_t j = 0; j < row1; ++j)
        all.m1[row * row1 + j] = cfg.snr_m1 * tmpl_m1[c][j] + cfg.noise_std * normal(rng);
      for (std::size_t j = 0; j < row2; ++j)
        all.m2[row * row2 + j] = cfg.snr_m2 * tmpl_m2[c][j] + cfg.noise_std * normal(rng);
    }
  }
  if (cfg.encoding == Encoding::kRate) {
    all.m1 = encode_rate(all.m1, cfg.rate_scale, rng);
    all.m2 = encode_rate(all.m2, cfg.rate_scale, rng);
  }
  for (double& v : all.m1.data()) v = to_f32(v);
  for (double& v : all.m2.data()) v = to_f32(v);

  const auto per_class_train = static_cast<std::size_t>(
      std::lround(cfg.train_fraction * static_cast<double>(cfg.samples_per_class)));
  const std::size_t n_train = std::clamp<std::size_t>(per_class_train, 1, cfg.samples_per_class - 1);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    std::vector<std::size_t> rows(cfg.samples_per_class);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = c * cfg.samples_per_class + i;
    std::shuffle(rows.begin(), rows.end(), rng);
    train_idx.insert(train_idx.end(), rows.begin(), rows.begin() + n_train);
    test_idx.insert(test_idx.end(), rows.begin() + n_train, rows.end());
  }
  std::shuffle(train_idx.begin(), train_idx.end(), rng);
  std::shuffle(test_idx.begin(), test_idx.end(), rng);

  DatasetSplits out{all.subset(train_idx), all.subset(test_idx)};
  out.train.split = "train";
  out.test.split = "test";
  return out;
}

DatasetSplits generate_to_disk(const SynthConfig& cfg, const fs::path& out) {
  DatasetSplits splits = generate(cfg);
  save_split(splits.train, out / "train");
  save_split(splits.test, out / "test");
  return splits;
}

namespace {

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(fmt::format("write to {} failed", path.string()));
}

std::vector<char> read_bytes(const fs::path& path, const std::string& what) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(fmt::format("dataset file '{}' missing at {}", what, path.string()));
  return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

Tensor decode_f32(const std::vector<char>& bytes, const Shape& shape, const std::string& what) {
  const std::size_t n = shape_numel(shape);
  if (bytes.size() != n * sizeof(float)) {
    throw FormatError(fmt::format("dataset file '{}' has {} bytes, expected {} for shape {}", what,
                                  bytes.size(), n * sizeof(float), shape_str(shape)));
  }
  binio::Reader r(bytes);
  Tensor t(shape);
  for (std::size_t i = 0; i < n; ++i) {
    float v = 0.0f;
    r.get(v);
    t[i] = static_cast<double>(v);
  }
  return t;
}

Shape shape_from_json(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw FormatError(fmt::format("dataset meta lacks '{}'", key));
  }
  Shape s;
  for (const auto& v : j[key]) {
    if (!v.is_number_unsigned()) throw FormatError(fmt::format("dataset meta '{}' is not a shape", key));
    s.push_back(v.get<std::size_t>());
  }
  return s;
}

}  // namespace

void save_split(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  json meta = {
      {"format_version", kDatasetFormatVersion},
      {"split", ds.split},
      {"count", ds.size()},
      {"classes", ds.classes},
      {"class_names", ds.class_names},
      {"encoding", encoding_name(ds.encoding)},
      {"m1_shape", ds.m1.shape()},
      {"m2_shape", ds.m2.shape()},
  };
  {
    std::ofstream f(dir / "meta.json", std::ios::trunc);
    if (!f) throw IoError(fmt::format("cannot write {}", (dir / "meta.json").string()));
    f << meta.dump(2) << '\n';
  }
  std::vector<char> bytes;
  bytes.reserve(ds.m1.size() * sizeof(float));
  for (double v : ds.m1.data()) binio::put_f32(bytes, v);
  write_bytes(dir / "m1.bin", bytes);
  bytes.clear();
  for (double v : ds.m2.data()) binio::put_f32(bytes, v);
  write_bytes(dir / "m2.bin", bytes);
  bytes.clear();
  for (int y : ds.labels) binio::put(bytes, static_cast<std::int32_t>(y));
  write_bytes(dir / "labels.bin", bytes);
}

Dataset load_split(const fs::path& dir) {
  json meta;
  {
    std::ifstream f(dir / "meta.json");
    if (!f) throw FormatError(fmt::format("dataset file 'meta' missing in {}", dir.string()));
    try {
      f >> meta;
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("dataset file 'meta' is not valid JSON: {}", e.what()));
    }
  }
  Dataset ds;
  std::size_t count = 0;
  try {
    if (meta.at("format_version").get<std::uint32_t>() != kDatasetFormatVersion) {
      throw FormatError(fmt::format("dataset format version {} unsupported (expected {})",
                                    meta.at("format_version").dump(), kDatasetFormatVersion));
    }
    ds.split = meta.at("split").get<std::string>();
    ds.classes = meta.at("classes").get<std::size_t>();
    ds.class_names = meta.at("class_names").get<std::vector<std::string>>();
    ds.encoding = parse_encoding(meta.at("encoding").get<std::string>());
    count = meta.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("dataset file 'meta' malformed: {}", e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("dataset file 'meta' malformed: {}", e.what()));
  }
  const Shape s1 = shape_from_json(meta, "m1_shape");
  const Shape s2 = shape_from_json(meta, "m2_shape");
  if (s1.size() != 3 || s2.size() != 3 || s1[0] != count || s2[0] != count) {
    throw FormatError(fmt::format("dataset file 'meta' shapes {} / {} disagree with count {}",
                                  shape_str(s1), shape_str(s2), count));
  }
  if (ds.classes < 2 || ds.class_names.size() != ds.classes) {
    throw FormatError("dataset file 'meta' class list is inconsistent");
  }
  ds.m1 = decode_f32(read_bytes(dir / "m1.bin", "m1"), s1, "m1");
  ds.m2 = decode_f32(read_bytes(dir / "m2.bin", "m2"), s2, "m2");
  const std::vector<char> lb = read_bytes(dir / "labels.bin", "labels");
  if (lb.size() != count * sizeof(std::int32_t)) {
    throw FormatError(fmt::format("dataset file 'labels' has {} bytes, expected {}", lb.size(),
                                  count * sizeof(std::int32_t)));
  }
  binio::Reader r(lb);
  ds.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::int32_t y = 0;
    r.get(y);
    if (y < 0 || static_cast<std::size_t>(y) >= ds.classes) {
      throw FormatError(fmt::format("dataset file 'labels' entry {} = {} outside [0, {})", i, y,
                                    ds.classes));
    }
    ds.labels[i] = y;
  }
  return ds;
}

DatasetSplits load_dataset(const fs::path& root) {
  DatasetSplits s{load_split(root / "train"), load_split(root / "test")};
  if (s.train.m1.extent(1) != s.test.m1.extent(1) || s.train.m2.extent(2) != s.test.m2.extent(2) ||
      s.train.classes != s.test.classes) {
    throw FormatError("train and test splits disagree on shapes or classes");
  }
  return s;
}

}  // namespace taaf
