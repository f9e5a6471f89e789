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

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "taaf/cli.hpp"
#include "taaf/energy.hpp"
#include "taaf/error.hpp"
#include "taaf/train.hpp"

using namespace taaf;
using namespace taaf::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "taaf");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Brute force: walk every output unit and kernel tap, count one accumulate
// per tap whose input is a spike.
std::uint64_t naive_conv_synops(const Tensor& in, const Conv1dGeometry& g) {
  const std::size_t rows = in.extent(0) * in.extent(1);
  std::uint64_t n = 0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < g.out_channels; ++o)
      for (std::size_t j = 0; j < g.out_length(); ++j)
        for (std::size_t c = 0; c < g.in_channels; ++c)
          for (std::size_t q = 0; q < g.kernel; ++q) {
            const long pos = long(j * g.stride + q) - long(g.pad_left);
            if (pos < 0 || pos >= long(g.length)) continue;
            n += in[r * g.in_features() + c * g.length + std::size_t(pos)] != 0.0;
          }
  return n;
}

std::uint64_t naive_conv_macs(std::size_t rows, const Conv1dGeometry& g) {
  std::uint64_t n = 0;
  for (std::size_t j = 0; j < g.out_length(); ++j)
    for (std::size_t q = 0; q < g.kernel; ++q) {
      const long pos = long(j * g.stride + q) - long(g.pad_left);
      n += pos >= 0 && pos < long(g.length);
    }
  return n * g.out_channels * g.in_channels * rows;
}

const LayerOps& layer(const OpCounts& c, const std::string& name) {
  for (const LayerOps& l : c.layers)
    if (l.name == name) return l;
  throw std::runtime_error("no layer " + name);
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  Run none = cli({});
  CHECK(none.code == kExitUsage);
  CHECK(none.err.find("synth") != std::string::npos);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"synth", "--config"}).code == kExitUsage);
  CHECK(cli({"report", "--metrics", "x.csv", "--format", "xml"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("data errors exit 2") {
  const fs::path dir = scratch_dir("cli_bad");
  CHECK(cli({"eval", "--checkpoint", (dir / "nope.bin").string(), "--data", dir.string()}).code ==
        kExitData);
  write(dir / "bad.json", R"({"nonsense":1})");
  CHECK(cli({"synth", "--config", (dir / "bad.json").string(), "--out", (dir / "d").string()})
            .code == kExitData);
  write(dir / "m.csv", "not,a,header\n");
  CHECK(cli({"report", "--metrics", (dir / "m.csv").string()}).code == kExitData);
}

TEST_CASE("synth, train, eval, report and energy end to end") {
  const fs::path dir = scratch_dir("cli_smoke");
  const std::string data = (dir / "data").string(), run = (dir / "run").string();
  write(dir / "train.json", R"({"epochs":2,"batch_size":32,"feature_width":16,"conv_channels":[4]})");

  Run s = cli({"synth", "--config", TAAF_SOURCE_DIR "/recipes/balanced.json", "--out", data});
  REQUIRE(s.code == kExitOk);
  Run t = cli({"train", "--config", (dir / "train.json").string(), "--data", data, "--out", run,
               "--seed", "3"});
  REQUIRE(t.code == kExitOk);
  CHECK(fs::exists(dir / "run" / "checkpoint.bin"));
  CHECK(fs::exists(dir / "run" / "metrics.csv"));

  Run e = cli({"eval", "--checkpoint", run + "/checkpoint.bin", "--data", data});
  REQUIRE(e.code == kExitOk);
  CHECK(e.out.rfind(kMetricsHeader, 0) == 0);

  Run rc = cli({"report", "--metrics", run + "/metrics.csv", "--format", "csv"});
  REQUIRE(rc.code == kExitOk);
  std::ifstream m(run + "/metrics.csv");
  std::stringstream file;
  file << m.rdbuf();
  CHECK(rc.out == file.str());

  Run rj = cli({"report", "--metrics", run + "/metrics.csv", "--format", "json"});
  REQUIRE(rj.code == kExitOk);
  const nlohmann::json doc = nlohmann::json::parse(rj.out);
  REQUIRE(doc.is_array());
  CHECK(doc.size() == 2);
  CHECK(doc[1]["epoch"] == 1);
  CHECK(doc[0]["test"].contains("alpha_entropy_f"));

  Run en = cli({"energy", "--checkpoint", run + "/checkpoint.bin", "--data", data});
  REQUIRE(en.code == kExitOk);
  const nlohmann::json ej = nlohmann::json::parse(en.out);
  CHECK(ej["ratio"].get<double>() > 0.0);
  CHECK(ej["layers"].is_array());

  // Same seed, same bytes; nothing written outside --out.
  const std::string run2 = (dir / "run2").string();
  REQUIRE(cli({"train", "--config", (dir / "train.json").string(), "--data", data, "--out", run2,
               "--seed", "3"})
              .code == kExitOk);
  std::ifstream a(run + "/checkpoint.bin", std::ios::binary), b(run2 + "/checkpoint.bin", std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  std::vector<std::string> entries;
  for (const auto& de : fs::directory_iterator(dir)) entries.push_back(de.path().filename().string());
  std::sort(entries.begin(), entries.end());
  CHECK(entries == std::vector<std::string>{"data", "run", "run2", "train.json"});
}

TEST_CASE("conv connectivity") {
  Conv1dGeometry g;
  g.in_channels = 2;
  g.length = 6;
  g.out_channels = 3;
  g.kernel = 3;
  g.stride = 2;
  g.pad_left = 1;
  g.pad_right = 1;
  const std::vector<std::uint64_t> fan = conv_fan_out(g);
  std::uint64_t total = 0;
  for (std::uint64_t f : fan) total += f;
  CHECK(total == conv_connections(g));
  CHECK(conv_connections(g) == naive_conv_macs(1, g));
  // A single spike at input (c=0, i=1) reaches every output window covering it.
  Tensor one(Shape{1, 1, g.in_features()});
  one[1] = 1.0;
  CHECK(naive_conv_synops(one, g) == fan[1]);
}

TEST_CASE("count_ops agrees with a brute-force counter") {
  for (std::uint64_t seed : {1, 2, 3}) {
    SynthConfig sc = SynthConfig::imbalanced_a();
    sc.samples_per_class = 5;
    sc.features_m1 = 9;
    sc.features_m2 = 7;
    sc.seed = seed;
    sc.encoding = seed == 3 ? Encoding::kRate : Encoding::kCurrent;
    const DatasetSplits d = generate(sc);
    TrainConfig tc;
    tc.seed = seed;
    tc.conv_channels = {3, 2};
    tc.conv_stride = seed == 2 ? 2 : 1;
    tc.conv_padding = seed == 1 ? Padding::kSame : Padding::kValid;
    tc.feature_width = 6;
    tc.attention_width = 4;
    TaafModel model(make_model_config(tc, DataShape::of(d.test)), seed);
    const OpCounts counts = count_ops(model, d.test);

    std::uint64_t synops = 0, snn = 0, ann = 0;
    for (const LayerOps& l : counts.layers) {
      synops += l.synops;
      snn += l.snn_macs;
      ann += l.ann_macs;
    }
    CHECK(synops == counts.synops);
    CHECK(snn == counts.snn_macs);
    CHECK(ann == counts.ann_macs);

    for (Modality m : {Modality::kM1, Modality::kM2}) {
      Branch& br = model.branch(m);
      const Tensor& raw = m == Modality::kM1 ? d.test.m1 : d.test.m2;
      const std::size_t rows = raw.extent(0) * raw.extent(1);
      Tape t;
      const std::vector<Var> outs = br.encode_layers(t, t.constant(raw));
      const std::string prefix = modality_name(m);
      for (std::size_t i = 0; i < br.conv_layers().size(); ++i) {
        const Conv1dGeometry& g = br.conv_layers()[i].geometry();
        const LayerOps& l = layer(counts, prefix + ".conv" + std::to_string(i));
        const bool spiking = i > 0 || sc.encoding == Encoding::kRate;
        const Tensor& in = i == 0 ? raw : outs[i - 1].value();
        CHECK(l.ann_macs == naive_conv_macs(rows, g));
        CHECK(l.synops == (spiking ? naive_conv_synops(in, g) : 0));
        CHECK(l.snn_macs == (spiking ? 0 : naive_conv_macs(rows, g)));
        if (spiking) CHECK(l.synops <= l.ann_macs);
      }
      const LayerOps& fc = layer(counts, prefix + ".fc");
      const Tensor& fin = outs[outs.size() - 2].value();
      std::uint64_t spikes = 0;
      for (double v : fin.data()) spikes += v != 0.0;
      CHECK(fc.synops == spikes * br.linear_layer().out_features());
      CHECK(fc.ann_macs ==
            rows * br.linear_layer().in_features() * br.linear_layer().out_features());
    }
  }
}

TEST_CASE("zero input gives zero synops in spike-driven layers") {
  SynthConfig sc = SynthConfig::balanced();
  sc.samples_per_class = 3;
  sc.features_m1 = 8;
  sc.features_m2 = 8;
  sc.encoding = Encoding::kRate;
  DatasetSplits d = generate(sc);
  d.test.m1.fill(0.0);
  d.test.m2.fill(0.0);
  TrainConfig tc;
  tc.feature_width = 6;
  TaafModel model(make_model_config(tc, DataShape::of(d.test)), 1);
  // Zero the biases so nothing fires without input.
  for (Parameter* p : model.parameters())
    if (p->name.find("bias") != std::string::npos && p->name.find("classifier") == std::string::npos)
      p->value.fill(0.0);
  CHECK(count_ops(model, d.test).synops == 0);
}

TEST_CASE("energy model") {
  OpCounts c;
  c.add({"x", true, 1000, 0, 0});
  EnergyEstimate e = estimate_energy(c);
  CHECK(e.e_snn == doctest::Approx(0.9e-9).epsilon(1e-15));
  CHECK(e.e_ann == 0.0);
  CHECK(e.ratio == 0.0);
  EnergyEstimate z = estimate_energy(OpCounts{});
  CHECK(z.e_snn == 0.0);
  CHECK(z.e_ann == 0.0);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = rng_for(seed);
    OpCounts k;
    k.add({"a", true, pick(rng, 0, 100000), 0, pick(rng, 1, 100000)});
    k.add({"b", false, 0, pick(rng, 0, 1000), pick(rng, 1, 1000)});
    const EnergyEstimate one = estimate_energy(k);
    const EnergyEstimate two = estimate_energy(k + k);
    CHECK(two.e_snn == 2.0 * one.e_snn);
    CHECK(two.e_ann == 2.0 * one.e_ann);
    CHECK(two.ratio == one.ratio);
  }

  // Spike-driven layers only: the ratio is below 1 exactly when the mean
  // activity per connection is below e_mac / e_ac.
  const EnergyModel em;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = rng_for(seed, 1);
    const std::uint64_t macs = pick(rng, 1, 1000000);
    const std::uint64_t syn = pick(rng, 0, macs);  // at most one spike per connection
    OpCounts k;
    k.add({"s", true, syn, 0, macs});
    const EnergyEstimate r = estimate_energy(k, em);
    CHECK(r.ratio < 1.0);
    CHECK(r.ratio == doctest::Approx(double(syn) * em.e_ac / (double(macs) * em.e_mac)));
  }
  EnergyModel bad;
  bad.e_ac = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
