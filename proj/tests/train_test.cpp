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
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "support.hpp"
#include "taaf/checkpoint.hpp"
#include "taaf/error.hpp"
#include "taaf/train.hpp"

using namespace taaf;
using namespace taaf::testing;
namespace fs = std::filesystem;

namespace {

DatasetSplits tiny_data(std::uint64_t seed = 1) {
  SynthConfig c = SynthConfig::imbalanced_a();
  c.samples_per_class = 10;
  c.features_m1 = 8;
  c.features_m2 = 8;
  c.seed = seed;
  return generate(c);
}

TrainConfig tiny_config() {
  TrainConfig t;
  t.epochs = 2;
  t.batch_size = 8;
  t.conv_channels = {2};
  t.feature_width = 8;
  t.attention_width = 4;
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

TEST_CASE("train config parsing") {
  TrainConfig c = parse_train_config(
      R"({"epochs":3,"lr":0.1,"gamma_m1":2,"attention_enabled":false,"conv_channels":[3,5]})");
  CHECK(c.epochs == 3);
  CHECK(c.lr == 0.1);
  CHECK(c.loss.gamma_m1 == 2.0);
  CHECK(!c.attention_enabled);
  CHECK(c.conv_channels == std::vector<std::size_t>{3, 5});
  CHECK_THROWS_AS(parse_train_config(R"({"epoch":3})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"optimizer":"adam"})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"lr":0})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"batch_size":0})"), ConfigError);
  // Serialisation round-trips through the parser.
  CHECK(train_config_json(parse_train_config(train_config_json(c))) == train_config_json(c));
  TrainConfig d;
  d.epochs = 10;
  CHECK(d.resolved_modulation_end() == 6);
}

TEST_CASE("modulation schedule") {
  CHECK(!modulation_schedule(0, 0, true));
  CHECK(!modulation_schedule(5, 0, true));
  CHECK(modulation_schedule(69, 70, true));
  CHECK(!modulation_schedule(70, 70, true));
  CHECK(!modulation_schedule(3, 70, false));
  TrainConfig c;
  c.epochs = 10;
  c.modulation_end_epoch = 4;
  CHECK(modulation_schedule(3, c));
  CHECK(!modulation_schedule(4, c));
  c.modulation_enabled = false;
  CHECK(!modulation_schedule(0, c));
}

TEST_CASE("optimizer step") {
  Tensor theta = Tensor::vec({1, 2}), v(Shape{2});
  optimizer_step(theta, Tensor::vec({5, -3}), v, 0.0, 0.9);
  CHECK(theta == Tensor::vec({1, 2}));

  Tensor a = Tensor::vec({3.0}), va(Shape{1});
  optimizer_step(a, Tensor::vec({1.0}), va, 1.0, 0.0);
  CHECK(a[0] == 2.0);

  // Two momentum steps against the scalar recurrence.
  Tensor b = Tensor::vec({1.0}), vb(Shape{1});
  optimizer_step(b, Tensor::vec({0.5}), vb, 0.1, 0.9);
  optimizer_step(b, Tensor::vec({-0.2}), vb, 0.1, 0.9);
  double vel = 0.0, th = 1.0;
  for (double g : {0.5, -0.2}) {
    vel = 0.9 * vel + g;
    th -= 0.1 * vel;
  }
  CHECK(b[0] == th);
  CHECK(vb[0] == vel);

  Tensor c(Shape{2}), vc(Shape{2});
  CHECK_THROWS_AS(optimizer_step(c, Tensor(Shape{3}), vc, 0.1, 0.9), ContractError);
}

TEST_CASE("one epoch produces one row per split with every field") {
  const DatasetSplits d = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  const fs::path dir = scratch_dir("train_schema");
  cfg.metrics_path = (dir / "metrics.csv").string();
  TrainResult r = train(cfg, d);
  REQUIRE(r.metrics.size() == 2);
  CHECK(r.metrics[0].split == "train");
  CHECK(r.metrics[1].split == "test");
  for (const EpochMetrics& m : r.metrics) {
    CHECK(m.epoch == 0);
    for (double v : {m.acc_fused, m.acc_m1, m.acc_m2}) CHECK((v >= 0.0 && v <= 1.0));
    for (double v : {m.loss_f, m.loss_m1, m.loss_m2, m.k_m1, m.k_m2, m.rho_m1, m.alpha_entropy_f})
      CHECK(std::isfinite(v));
  }
  std::ifstream in(cfg.metrics_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == kMetricsHeader);
  std::vector<EpochMetrics> back = read_metrics_csv(cfg.metrics_path);
  REQUIRE(back.size() == 2);
  CHECK(metrics_csv_row(back[1]) == metrics_csv_row(r.metrics[1]));
  CHECK(r.iterations.size() == 4);  // 32 train samples, batch 8

  CHECK_THROWS_AS(train(cfg, DatasetSplits{d.train.subset({}), d.test}), ConfigError);
}

TEST_CASE("same seed gives a byte-identical metrics file") {
  const DatasetSplits d = tiny_data();
  const fs::path dir = scratch_dir("train_det");
  TrainConfig cfg = tiny_config();
  cfg.metrics_path = (dir / "a.csv").string();
  train(cfg, d);
  cfg.metrics_path = (dir / "b.csv").string();
  train(cfg, d);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(!slurp(dir / "a.csv").empty());
  cfg.seed = 2;
  cfg.metrics_path = (dir / "c.csv").string();
  train(cfg, d);
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
}

TEST_CASE("the baseline's first loss equals the uniform-attention objective") {
  const DatasetSplits d = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.batch_size = d.train.size();
  cfg.attention_enabled = false;
  cfg.modulation_enabled = false;
  cfg.loss.beta = 0.7;
  TrainResult r = train(cfg, d);

  const DataShape shape = DataShape::of(d.train);
  TaafModel model(make_model_config(cfg, shape), cfg.seed);
  for (Parameter* p : model.parameters())
    for (double& v : p->value.data()) v = f32(v);
  Tape t;
  const ForwardPass pass = model.forward(t, d.train.m1, d.train.m2);
  const std::size_t T = pass.logits[0].shape()[1];
  Var uniform_alpha = t.constant(Tensor(Shape{T}, 1.0 / double(T)));
  auto pathway = [&](Pathway p) {
    return agl_loss(pass.logits_of(p), d.train.labels, uniform_alpha, cfg.loss.lambda,
                    cfg.loss.phi)
        .value()
        .item();
  };
  const double expect =
      cfg.loss.beta * (pathway(Pathway::kM1) + pathway(Pathway::kM2)) + pathway(Pathway::kFused);
  REQUIRE(!r.iterations.empty());
  CHECK(std::abs(r.iterations[0].loss_total - expect) < 1e-12);
  CHECK(r.iterations[0].k_m1 == 1.0);
  CHECK(r.iterations[0].k_m2 == 1.0);
}

TEST_CASE("evaluate: tie rule and chance level") {
  SynthConfig sc = SynthConfig::balanced();
  sc.samples_per_class = 100;
  sc.features_m1 = 8;
  sc.features_m2 = 8;
  const DatasetSplits d = generate(sc);
  TrainConfig cfg = tiny_config();
  Trainer tr(cfg, DataShape::of(d.train));

  // Random initial parameters sit near chance.
  EpochMetrics m = evaluate(tr.model(), d.train, cfg.loss, false);
  const double n = double(d.train.size()), p = 0.25;
  CHECK(std::abs(m.acc_fused - p) < 3 * std::sqrt(p * (1 - p) / n) + 0.05);

  // Identical logits for every class: everything goes to class 0.
  tr.model().classifier().weight().value.fill(0.0);
  tr.model().classifier().bias().value.fill(0.0);
  EpochMetrics z = evaluate(tr.model(), d.test, cfg.loss, false);
  CHECK(z.acc_fused == 0.25);
  CHECK(z.acc_m1 == 0.25);

  // Bias strongly favouring class 2 and a test set of only class 2.
  tr.model().classifier().bias().value[2] = 50.0;
  std::vector<std::size_t> only2;
  for (std::size_t i = 0; i < d.test.size(); ++i)
    if (d.test.labels[i] == 2) only2.push_back(i);
  CHECK(evaluate(tr.model(), d.test.subset(only2), cfg.loss, false).acc_fused == 1.0);
}

TEST_CASE("NaN in the objective aborts with context") {
  const DatasetSplits d = tiny_data();
  Trainer tr(tiny_config(), DataShape::of(d.train));
  tr.model().classifier().bias().value[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    tr.run_epoch(d.train, d.test);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("batch 0") != std::string::npos);
  }
}

TEST_CASE("checkpoint encode and decode") {
  const DatasetSplits d = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  Trainer tr(cfg, DataShape::of(d.train));
  tr.fit(d.train, d.test);
  const Checkpoint ck = tr.checkpoint();
  CHECK(ck.epoch == 1);
  CHECK(ck.momentum.size() == ck.parameters.size());
  const std::vector<char> bytes = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(back) == bytes);
  REQUIRE(back.parameters.size() == ck.parameters.size());
  for (std::size_t i = 0; i < ck.parameters.size(); ++i) {
    CHECK(back.parameters[i].name == ck.parameters[i].name);
    CHECK(back.parameters[i].value == ck.parameters[i].value);
    CHECK(back.momentum[i].value == ck.momentum[i].value);
  }
  CHECK(back.shape == ck.shape);
  CHECK(back.seed == ck.seed);
  CHECK(train_config_json(back.config) == train_config_json(ck.config));

  std::vector<char> bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad[4] = 7;  // version
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  bad.assign(bytes.begin(), bytes.end() - 5);
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);

  const fs::path dir = scratch_dir("ckpt");
  save_checkpoint(dir / "c.bin", ck);
  CHECK(encode_checkpoint(load_checkpoint(dir / "c.bin")) == bytes);
  CHECK_THROWS(load_checkpoint(dir / "missing.bin"));
}

TEST_CASE("resuming from a checkpoint matches an uninterrupted run") {
  const DatasetSplits d = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 3;
  Trainer full(cfg, DataShape::of(d.train));
  const std::vector<EpochMetrics> rows = full.fit(d.train, d.test);

  Trainer first(cfg, DataShape::of(d.train));
  first.run_epoch(d.train, d.test);
  first.run_epoch(d.train, d.test);
  const std::vector<char> bytes = encode_checkpoint(first.checkpoint());
  Trainer resumed = Trainer::restore(decode_checkpoint(bytes));
  CHECK(resumed.epochs_done() == 2);
  const std::vector<EpochMetrics> next = resumed.run_epoch(d.train, d.test);
  CHECK(metrics_csv_row(next[0]) == metrics_csv_row(rows[4]));
  CHECK(metrics_csv_row(next[1]) == metrics_csv_row(rows[5]));
  CHECK(encode_checkpoint(resumed.checkpoint()) == encode_checkpoint(full.checkpoint()));
}

TEST_CASE("parameter count is constant across training") {
  const DatasetSplits d = tiny_data();
  Trainer tr(tiny_config(), DataShape::of(d.train));
  const std::size_t before = tr.model().parameter_count();
  tr.fit(d.train, d.test);
  CHECK(tr.model().parameter_count() == before);
  CHECK(tr.iterations().size() == 2 * 4);
}
