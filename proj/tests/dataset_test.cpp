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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "support.hpp"
#include "taaf/dataset.hpp"
#include "taaf/error.hpp"

using namespace taaf;
using namespace taaf::testing;
namespace fs = std::filesystem;

namespace {

SynthConfig tiny() {
  SynthConfig c = SynthConfig::imbalanced_a();
  c.samples_per_class = 10;
  c.features_m1 = 5;
  c.features_m2 = 4;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Multinomial logistic regression by full-batch gradient descent from zero
// weights; returns test accuracy. x rows are flattened samples.
double linear_probe(const Tensor& xtr, const std::vector<int>& ytr, const Tensor& xte,
                    const std::vector<int>& yte, std::size_t classes) {
  const std::size_t n = ytr.size(), d = xtr.size() / n;
  std::vector<double> w(d * classes, 0.0), b(classes, 0.0);
  auto logits = [&](const Tensor& x, std::size_t i, std::vector<double>& z) {
    for (std::size_t c = 0; c < classes; ++c) {
      z[c] = b[c];
      for (std::size_t k = 0; k < d; ++k) z[c] += x[i * d + k] * w[k * classes + c];
    }
  };
  std::vector<double> z(classes), gw(w.size()), gb(classes);
  for (int it = 0; it < 300; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      logits(xtr, i, z);
      double mx = z[0];
      for (double v : z) mx = std::max(mx, v);
      double s = 0.0;
      for (double& v : z) s += (v = std::exp(v - mx));
      for (std::size_t c = 0; c < classes; ++c) {
        const double g = z[c] / s - (static_cast<int>(c) == ytr[i] ? 1.0 : 0.0);
        gb[c] += g;
        for (std::size_t k = 0; k < d; ++k) gw[k * classes + c] += g * xtr[i * d + k];
      }
    }
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= 0.5 * gw[j] / double(n);
    for (std::size_t c = 0; c < classes; ++c) b[c] -= 0.5 * gb[c] / double(n);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < yte.size(); ++i) {
    logits(xte, i, z);
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (z[c] > z[best]) best = c;
    correct += static_cast<int>(best) == yte[i];
  }
  return double(correct) / double(yte.size());
}

}  // namespace

TEST_CASE("presets") {
  SynthConfig a = SynthConfig::imbalanced_a();
  CHECK(a.snr_m1 / a.snr_m2 == 3.0);
  CHECK(a.timesteps_m1 == 4);
  CHECK(a.timesteps_m2 == 3);
  SynthConfig b = SynthConfig::balanced();
  CHECK(b.snr_m1 == b.snr_m2);
  CHECK(b.timesteps_m1 == 5);
  CHECK(b.timesteps_m2 == 5);
}

TEST_CASE("synth config parsing") {
  SynthConfig c = parse_synth_config(R"({"recipe":"balanced","samples_per_class":7,"encoding":"rate"})");
  CHECK(c.samples_per_class == 7);
  CHECK(c.timesteps_m1 == 5);
  CHECK(c.encoding == Encoding::kRate);
  CHECK_THROWS_AS(parse_synth_config(R"({"bogus":1})"), ConfigError);
  CHECK_THROWS_AS(parse_synth_config(R"({"recipe":"nope"})"), ConfigError);
  CHECK_THROWS_AS(parse_synth_config("not json"), ConfigError);
  SynthConfig bad = tiny();
  bad.classes = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("generation is deterministic and class balanced") {
  const SynthConfig cfg = tiny();
  DatasetSplits a = generate(cfg), b = generate(cfg);
  CHECK(a.train.m1 == b.train.m1);
  CHECK(a.test.m2 == b.test.m2);
  CHECK(a.train.labels == b.train.labels);
  CHECK(a.train.size() + a.test.size() == cfg.classes * cfg.samples_per_class);
  CHECK(a.train.m1.shape() == Shape{a.train.size(), 4, 5});
  CHECK(a.train.m2.shape() == Shape{a.train.size(), 3, 4});
  for (const Dataset* ds : {&a.train, &a.test}) {
    std::vector<std::size_t> counts(cfg.classes, 0);
    for (int y : ds->labels) ++counts.at(static_cast<std::size_t>(y));
    const double target = double(ds->size()) / double(cfg.classes);
    for (std::size_t c : counts) CHECK(std::abs(double(c) - target) <= 1.0);
  }
  SynthConfig other = cfg;
  other.seed = 2;
  CHECK(!(generate(other).train.m1 == a.train.m1));
}

TEST_CASE("disk round trip is bit exact and files are reproducible") {
  const SynthConfig cfg = tiny();
  const fs::path d1 = scratch_dir("ds_a"), d2 = scratch_dir("ds_b");
  DatasetSplits g = generate_to_disk(cfg, d1);
  generate_to_disk(cfg, d2);
  for (const char* f : {"train/m1.bin", "train/m2.bin", "train/labels.bin", "train/meta.json",
                        "test/m1.bin"})
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  DatasetSplits back = load_dataset(d1);
  CHECK(back.train.m1 == g.train.m1);
  CHECK(back.train.m2 == g.train.m2);
  CHECK(back.train.labels == g.train.labels);
  CHECK(back.test.m1 == g.test.m1);
  CHECK(back.test.class_names == g.test.class_names);
}

TEST_CASE("load rejects malformed splits and names the file") {
  const fs::path dir = scratch_dir("ds_bad");
  generate_to_disk(tiny(), dir);
  const fs::path split = dir / "train";

  fs::resize_file(split / "m1.bin", fs::file_size(split / "m1.bin") - 3);
  try {
    load_split(split);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("m1") != std::string::npos);
  }

  generate_to_disk(tiny(), dir);
  {
    std::fstream f(split / "labels.bin", std::ios::in | std::ios::out | std::ios::binary);
    const std::int32_t bad = 99;
    f.write(reinterpret_cast<const char*>(&bad), sizeof bad);
  }
  try {
    load_split(split);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("labels") != std::string::npos);
  }

  generate_to_disk(tiny(), dir);
  fs::remove(split / "meta.json");
  CHECK_THROWS_AS(load_split(split), FormatError);
}

TEST_CASE("rate encoding") {
  std::mt19937_64 rng(1);
  CHECK(encode_rate(Tensor(Shape{10, 10}), 1.0, rng) == Tensor(Shape{10, 10}));
  CHECK(encode_rate(Tensor(Shape{10, 10}, 3.0), 1.0, rng) == Tensor(Shape{10, 10}, 1.0));
  CHECK(encode_rate(Tensor(Shape{10, 10}, -3.0), 1.0, rng) == Tensor(Shape{10, 10}));
  Tensor raw = uniform({4}, rng);
  CHECK(encode_current(raw) == raw);
  for (double p : {0.1, 0.37, 0.8}) {
    const std::size_t n = 10000;
    Tensor s = encode_rate(Tensor(Shape{n}, p / 2.0), 2.0, rng);
    double hits = 0.0;
    for (double v : s.data()) hits += v;
    const double sigma = std::sqrt(p * (1 - p) / double(n));
    CHECK(std::abs(hits / double(n) - p) < 3 * sigma);
  }
  SynthConfig c = tiny();
  c.encoding = Encoding::kRate;
  DatasetSplits r = generate(c);
  for (double v : r.train.m1.data()) CHECK((v == 0.0 || v == 1.0));
  CHECK(generate(c).train.m1 == r.train.m1);
}

TEST_CASE("the stronger modality is more linearly separable") {
  for (std::uint64_t seed : {1, 2, 3}) {
    SynthConfig c = SynthConfig::imbalanced_a();
    c.seed = seed;
    c.samples_per_class = 60;
    DatasetSplits s = generate(c);
    const double acc1 = linear_probe(s.train.m1, s.train.labels, s.test.m1, s.test.labels, c.classes);
    const double acc2 = linear_probe(s.train.m2, s.train.labels, s.test.m2, s.test.labels, c.classes);
    CHECK(acc1 > acc2);
  }
  // Only m1 carries signal.
  SynthConfig c = SynthConfig::imbalanced_a();
  c.snr_m1 = 10.0;
  c.snr_m2 = 0.0;
  c.samples_per_class = 60;
  DatasetSplits s = generate(c);
  CHECK(linear_probe(s.train.m1, s.train.labels, s.test.m1, s.test.labels, c.classes) > 0.9);
  CHECK(linear_probe(s.train.m2, s.train.labels, s.test.m2, s.test.labels, c.classes) < 0.5);
}
