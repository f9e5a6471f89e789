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

#include "taaf/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "taaf/checkpoint.hpp"
#include "taaf/error.hpp"

namespace taaf {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (optimizer != "sgd") throw ConfigError(fmt::format("unknown optimizer '{}'", optimizer));
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError(fmt::format("lr {} must be > 0", lr));
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError(fmt::format("momentum {} not in [0,1)", momentum));
  }
  if (attention_width == 0) throw ConfigError("attention_width must be >= 1");
  lif.validate();
  loss.validate();
}

std::size_t TrainConfig::resolved_modulation_end() const {
  if (modulation_end_epoch) return *modulation_end_epoch;
  return (epochs * 3 + 4) / 5;
}

namespace {

const char* padding_name(Padding p) { return p == Padding::kValid ? "valid" : "same"; }

Padding parse_padding(const std::string& s) {
  if (s == "valid") return Padding::kValid;
  if (s == "same") return Padding::kSame;
  throw ConfigError(fmt::format("unknown conv_padding '{}'", s));
}

const char* aggregation_name(ScoreAggregation a) {
  return a == ScoreAggregation::kAttention ? "attention" : "mean";
}

ScoreAggregation parse_aggregation(const std::string& s) {
  if (s == "attention") return ScoreAggregation::kAttention;
  if (s == "mean") return ScoreAggregation::kMean;
  throw ConfigError(fmt::format("unknown score_aggregation '{}'", s));
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(fmt::format("'{}' must be a boolean", key));
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_unsigned()) {
      throw ConfigError(fmt::format("'{}' must be a non-negative integer", key));
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", key));
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(fmt::format("'{}' must be a string", key));
  }
  return v.get<T>();
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  TrainConfig c;
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"epochs", [&](const json& v, const std::string& k) { c.epochs = get_as<std::size_t>(v, k); }},
      {"batch_size",
       [&](const json& v, const std::string& k) { c.batch_size = get_as<std::size_t>(v, k); }},
      {"optimizer",
       [&](const json& v, const std::string& k) { c.optimizer = get_as<std::string>(v, k); }},
      {"lr", [&](const json& v, const std::string& k) { c.lr = get_as<double>(v, k); }},
      {"momentum", [&](const json& v, const std::string& k) { c.momentum = get_as<double>(v, k); }},
      {"seed", [&](const json& v, const std::string& k) { c.seed = get_as<std::uint64_t>(v, k); }},
      {"fusion",
       [&](const json& v, const std::string& k) { c.fusion = parse_fusion(get_as<std::string>(v, k)); }},
      {"fused_timesteps",
       [&](const json& v, const std::string& k) { c.fused_timesteps = get_as<std::size_t>(v, k); }},
      {"conv_channels",
       [&](const json& v, const std::string& k) {
         if (!v.is_array()) throw ConfigError("'conv_channels' must be an array");
         c.conv_channels.clear();
         for (const json& e : v) c.conv_channels.push_back(get_as<std::size_t>(e, k));
       }},
      {"conv_kernel",
       [&](const json& v, const std::string& k) { c.conv_kernel = get_as<std::size_t>(v, k); }},
      {"conv_stride",
       [&](const json& v, const std::string& k) { c.conv_stride = get_as<std::size_t>(v, k); }},
      {"conv_padding",
       [&](const json& v, const std::string& k) {
         c.conv_padding = parse_padding(get_as<std::string>(v, k));
       }},
      {"feature_width",
       [&](const json& v, const std::string& k) { c.feature_width = get_as<std::size_t>(v, k); }},
      {"tau", [&](const json& v, const std::string& k) { c.lif.tau = get_as<double>(v, k); }},
      {"v_th", [&](const json& v, const std::string& k) { c.lif.v_th = get_as<double>(v, k); }},
      {"surrogate_width",
       [&](const json& v, const std::string& k) { c.lif.surrogate_width = get_as<double>(v, k); }},
      {"attention_width",
       [&](const json& v, const std::string& k) { c.attention_width = get_as<std::size_t>(v, k); }},
      {"lambda", [&](const json& v, const std::string& k) { c.loss.lambda = get_as<double>(v, k); }},
      {"phi", [&](const json& v, const std::string& k) { c.loss.phi = get_as<double>(v, k); }},
      {"gamma_m1",
       [&](const json& v, const std::string& k) { c.loss.gamma_m1 = get_as<double>(v, k); }},
      {"gamma_m2",
       [&](const json& v, const std::string& k) { c.loss.gamma_m2 = get_as<double>(v, k); }},
      {"beta", [&](const json& v, const std::string& k) { c.loss.beta = get_as<double>(v, k); }},
      {"modulation_end_epoch",
       [&](const json& v, const std::string& k) {
         c.modulation_end_epoch = get_as<std::size_t>(v, k);
       }},
      {"score_aggregation",
       [&](const json& v, const std::string& k) {
         c.loss.score_aggregation = parse_aggregation(get_as<std::string>(v, k));
       }},
      {"attention_enabled",
       [&](const json& v, const std::string& k) { c.attention_enabled = get_as<bool>(v, k); }},
      {"modulation_enabled",
       [&](const json& v, const std::string& k) { c.modulation_enabled = get_as<bool>(v, k); }},
      {"alignment_enabled",
       [&](const json& v, const std::string& k) { c.alignment_enabled = get_as<bool>(v, k); }},
      {"metrics_path",
       [&](const json& v, const std::string& k) { c.metrics_path = get_as<std::string>(v, k); }},
  };
  for (const auto& [key, value] : doc.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
    it->second(value, key);
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError(fmt::format("cannot read config {}", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_train_config(ss.str());
}

std::string train_config_json(const TrainConfig& c) {
  json doc = {
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"optimizer", c.optimizer},
      {"lr", c.lr},
      {"momentum", c.momentum},
      {"seed", c.seed},
      {"fusion", fusion_name(c.fusion)},
      {"fused_timesteps", c.fused_timesteps},
      {"conv_channels", c.conv_channels},
      {"conv_kernel", c.conv_kernel},
      {"conv_stride", c.conv_stride},
      {"conv_padding", padding_name(c.conv_padding)},
      {"feature_width", c.feature_width},
      {"tau", c.lif.tau},
      {"v_th", c.lif.v_th},
      {"surrogate_width", c.lif.surrogate_width},
      {"attention_width", c.attention_width},
      {"lambda", c.loss.lambda},
      {"phi", c.loss.phi},
      {"gamma_m1", c.loss.gamma_m1},
      {"gamma_m2", c.loss.gamma_m2},
      {"beta", c.loss.beta},
      {"score_aggregation", aggregation_name(c.loss.score_aggregation)},
      {"attention_enabled", c.attention_enabled},
      {"modulation_enabled", c.modulation_enabled},
      {"alignment_enabled", c.alignment_enabled},
      {"metrics_path", c.metrics_path},
  };
  if (c.modulation_end_epoch) doc["modulation_end_epoch"] = *c.modulation_end_epoch;
  return doc.dump(2);
}

DataShape DataShape::of(const Dataset& ds) {
  return {ds.classes, ds.timesteps_m1(), ds.features_m1(), ds.timesteps_m2(), ds.features_m2()};
}

ModelConfig make_model_config(const TrainConfig& cfg, const DataShape& shape) {
  const std::size_t target = cfg.fused_timesteps != 0
                                 ? cfg.fused_timesteps
                                 : std::min(shape.timesteps_m1, shape.timesteps_m2);
  auto branch = [&](Modality m, std::size_t steps, std::size_t features) {
    BranchConfig b;
    b.modality = m;
    b.native_timesteps = steps;
    b.input_features = features;
    b.conv_channels = cfg.conv_channels;
    b.conv_kernel = cfg.conv_kernel;
    b.conv_stride = cfg.conv_stride;
    b.conv_padding = cfg.conv_padding;
    b.feature_width = cfg.feature_width;
    b.lif = cfg.lif;
    b.aligned_timesteps = target;
    b.alignment_enabled = cfg.alignment_enabled;
    return b;
  };
  ModelConfig mc;
  mc.m1 = branch(Modality::kM1, shape.timesteps_m1, shape.features_m1);
  mc.m2 = branch(Modality::kM2, shape.timesteps_m2, shape.features_m2);
  mc.classes = shape.classes;
  mc.attention_width = cfg.attention_width;
  mc.fusion = cfg.fusion;
  mc.attention_enabled = cfg.attention_enabled;
  mc.validate();
  return mc;
}

bool modulation_schedule(std::size_t epoch, std::size_t end_epoch, bool enabled) {
  return enabled && epoch < end_epoch;
}

bool modulation_schedule(std::size_t epoch, const TrainConfig& cfg) {
  return modulation_schedule(epoch, cfg.resolved_modulation_end(), cfg.modulation_enabled);
}

// ---------------------------------------------------------------------------
// Optimizer

void optimizer_step(Tensor& theta, const Tensor& grad, Tensor& velocity, double lr,
                    double momentum) {
  if (theta.shape() != grad.shape() || theta.shape() != velocity.shape()) {
    throw ContractError(fmt::format("optimizer_step: parameter {} vs gradient {} vs velocity {}",
                                    shape_str(theta.shape()), shape_str(grad.shape()),
                                    shape_str(velocity.shape())));
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    theta[i] -= lr * velocity[i];
  }
}

void SgdMomentum::step(std::span<Parameter* const> params) {
  if (velocity_.empty()) {
    for (const Parameter* p : params) velocity_.emplace_back(p->value.shape());
  }
  if (velocity_.size() != params.size()) {
    throw ContractError(fmt::format("optimizer holds {} velocities for {} parameters",
                                    velocity_.size(), params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    // A parameter the objective never reached has an empty gradient.
    const Tensor g = p.grad.shape() == p.value.shape() ? p.grad : Tensor(p.value.shape());
    optimizer_step(p.value, g, velocity_[i], lr_, momentum_);
  }
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double accuracy(const Tensor& logits, const Tensor& alpha_per_sample, std::span<const int> labels) {
  const std::vector<int> pred = argmax_rows(aggregate_logits(logits, alpha_per_sample));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double mean_entropy(const Tensor& alpha_per_sample) {
  const std::size_t batch = alpha_per_sample.extent(0), steps = alpha_per_sample.extent(1);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double h = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const double a = alpha_per_sample[b * steps + t];
      if (a > 0.0) h -= a * std::log(a);
    }
    total += h;
  }
  return total / static_cast<double>(batch);
}

}  // namespace

EpochMetrics evaluate(TaafModel& model, const Dataset& ds, const LossConfig& loss,
                      bool modulation_active, std::size_t epoch, const std::string& split) {
  if (ds.size() == 0) throw ConfigError(fmt::format("cannot evaluate empty split '{}'", split));
  Tape tape;
  const ForwardPass pass = model.forward(tape, ds.m1, ds.m2);
  const Objective obj = build_objective(pass, ds.labels, loss, modulation_active);

  EpochMetrics m;
  m.epoch = epoch;
  m.split = split;
  m.acc_m1 = accuracy(pass.logits[0].value(), pass.alpha_per_sample[0].value(), ds.labels);
  m.acc_m2 = accuracy(pass.logits[1].value(), pass.alpha_per_sample[1].value(), ds.labels);
  m.acc_fused = accuracy(pass.logits[2].value(), pass.alpha_per_sample[2].value(), ds.labels);
  m.loss_m1 = obj.pathway_loss[0].value().item();
  m.loss_m2 = obj.pathway_loss[1].value().item();
  m.loss_f = obj.pathway_loss[2].value().item();
  m.k_m1 = obj.modulation.k_m1;
  m.k_m2 = obj.modulation.k_m2;
  m.rho_m1 = obj.modulation.rho_m1;
  m.alpha_entropy_f = mean_entropy(pass.alpha_per_sample[2].value());
  return m;
}

// ---------------------------------------------------------------------------
// Metrics CSV

std::string metrics_csv_row(const EpochMetrics& m) {
  return fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}",
                     m.epoch, m.split, m.acc_fused, m.acc_m1, m.acc_m2, m.loss_f, m.loss_m1,
                     m.loss_m2, m.k_m1, m.k_m2, m.rho_m1, m.alpha_entropy_f);
}

namespace {

void write_rows(const fs::path& path, std::span<const EpochMetrics> rows, bool append) {
  const bool need_header = !append || !fs::exists(path) || fs::file_size(path) == 0;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
  if (!f) throw IoError(fmt::format("cannot write metrics to {}", path.string()));
  if (need_header) f << kMetricsHeader << '\n';
  for (const EpochMetrics& m : rows) f << metrics_csv_row(m) << '\n';
  if (!f) throw IoError(fmt::format("write to {} failed", path.string()));
}

}  // namespace

void write_metrics_csv(const fs::path& path, std::span<const EpochMetrics> rows) {
  write_rows(path, rows, false);
}

void append_metrics_csv(const fs::path& path, std::span<const EpochMetrics> rows) {
  write_rows(path, rows, true);
}

std::vector<EpochMetrics> read_metrics_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError(fmt::format("cannot read metrics file {}", path.string()));
  std::string line;
  if (!std::getline(f, line) || line != kMetricsHeader) {
    throw FormatError(fmt::format("{}: missing or unexpected metrics header", path.string()));
  }
  std::vector<EpochMetrics> rows;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) {
      throw FormatError(fmt::format("{}:{}: expected 12 fields, got {}", path.string(), lineno,
                                    cells.size()));
    }
    EpochMetrics m;
    try {
      m.epoch = std::stoul(cells[0]);
      m.split = cells[1];
      double* fields[] = {&m.acc_fused, &m.acc_m1, &m.acc_m2, &m.loss_f, &m.loss_m1,
                          &m.loss_m2,   &m.k_m1,   &m.k_m2,   &m.rho_m1, &m.alpha_entropy_f};
      for (std::size_t i = 0; i < 10; ++i) *fields[i] = std::stod(cells[i + 2]);
    } catch (const std::logic_error&) {
      throw FormatError(fmt::format("{}:{}: malformed number", path.string(), lineno));
    }
    rows.push_back(m);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

const TrainConfig& checked(const TrainConfig& cfg) {
  cfg.validate();
  return cfg;
}

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5b0ffu};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void check_finite(const Objective& obj, std::size_t epoch, std::size_t batch) {
  for (std::size_t p = 0; p < kNumPathways; ++p) {
    if (!std::isfinite(obj.pathway_loss[p].value().item())) {
      throw NumericError(fmt::format("non-finite loss at epoch {} batch {} pathway {}", epoch, batch,
                                     pathway_name(static_cast<Pathway>(p))));
    }
  }
  if (!std::isfinite(obj.total.value().item())) {
    throw NumericError(fmt::format("non-finite total loss at epoch {} batch {}", epoch, batch));
  }
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg, const DataShape& shape)
    : cfg_(checked(cfg)),
      shape_(shape),
      model_(make_model_config(cfg_, shape_), cfg_.seed),
      opt_(cfg_.lr, cfg_.momentum) {
  cfg_.loss.modulation_end_epoch = cfg_.resolved_modulation_end();
  round_state();
}

void Trainer::round_state() {
  // Training state lives on the float32 grid so checkpoints are exact.
  for (Parameter* p : model_.parameters())
    for (double& v : p->value.data()) v = to_f32(v);
  for (Tensor& v : opt_.velocity())
    for (double& x : v.data()) x = to_f32(x);
}

std::vector<EpochMetrics> Trainer::run_epoch(const Dataset& train, const Dataset& test) {
  if (train.size() == 0 || test.size() == 0) throw ConfigError("empty dataset split");
  if (DataShape::of(train) != shape_ || DataShape::of(test) != shape_) {
    throw ConfigError("dataset shapes do not match the model");
  }
  const std::size_t epoch = epoch_;
  const bool active = modulation_schedule(epoch, cfg_);
  const std::vector<std::size_t> order = epoch_order(cfg_.seed, epoch, train.size());
  const std::vector<Parameter*> params = model_.parameters();

  double k1 = 0.0, k2 = 0.0, rho = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size, ++batches) {
    const std::size_t len = std::min(cfg_.batch_size, order.size() - start);
    const Dataset batch = train.subset(std::span(order).subspan(start, len));
    Tape tape;
    Objective obj;
    try {
      const ForwardPass pass = model_.forward(tape, batch.m1, batch.m2);
      obj = build_objective(pass, batch.labels, cfg_.loss, active);
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("epoch {} batch {}: {}", epoch, batches, e.what()));
    }
    check_finite(obj, epoch, batches);
    tape.backward(obj.total);
    for (Parameter* p : params) p->zero_grad();
    tape.export_grads();
    opt_.step(params);
    round_state();

    IterationRecord rec;
    rec.epoch = epoch;
    rec.batch = batches;
    rec.modulation_active = active;
    rec.rho_m1 = obj.modulation.rho_m1;
    rec.rho_m2 = obj.modulation.rho_m2;
    rec.k_m1 = obj.modulation.k_m1;
    rec.k_m2 = obj.modulation.k_m2;
    rec.loss_total = obj.total.value().item();
    iterations_.push_back(rec);
    k1 += rec.k_m1;
    k2 += rec.k_m2;
    rho += rec.rho_m1;
    spdlog::debug("epoch {} batch {} loss {:.6f} rho_m1 {:.4f} k_m1 {:.4f} k_m2 {:.4f}", epoch,
                  batches, rec.loss_total, rec.rho_m1, rec.k_m1, rec.k_m2);
  }

  EpochMetrics tr = evaluate(model_, train, cfg_.loss, active, epoch, "train");
  tr.k_m1 = k1 / static_cast<double>(batches);
  tr.k_m2 = k2 / static_cast<double>(batches);
  tr.rho_m1 = rho / static_cast<double>(batches);
  EpochMetrics te = evaluate(model_, test, cfg_.loss, active, epoch, "test");
  spdlog::info("epoch {}: train acc f/m1/m2 {:.3f}/{:.3f}/{:.3f}, test {:.3f}/{:.3f}/{:.3f}", epoch,
               tr.acc_fused, tr.acc_m1, tr.acc_m2, te.acc_fused, te.acc_m1, te.acc_m2);
  ++epoch_;
  return {tr, te};
}

std::vector<EpochMetrics> Trainer::fit(const Dataset& train, const Dataset& test) {
  std::vector<EpochMetrics> all;
  while (epoch_ < cfg_.epochs) {
    std::vector<EpochMetrics> rows = run_epoch(train, test);
    if (!cfg_.metrics_path.empty()) append_metrics_csv(cfg_.metrics_path, rows);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return all;
}

Checkpoint Trainer::checkpoint() {
  Checkpoint ck;
  ck.config = cfg_;
  ck.config.metrics_path.clear();  // output location, not training state
  ck.shape = shape_;
  ck.seed = cfg_.seed;
  ck.epoch = static_cast<std::uint32_t>(epoch_);
  const std::vector<Parameter*> params = model_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ck.parameters.push_back({params[i]->name, params[i]->value});
    if (i < opt_.velocity().size()) {
      ck.momentum.push_back({"momentum/" + params[i]->name, opt_.velocity()[i]});
    }
  }
  return ck;
}

Trainer Trainer::restore(const Checkpoint& ck) {
  TrainConfig cfg = ck.config;
  cfg.seed = ck.seed;
  Trainer t(cfg, ck.shape);
  t.epoch_ = ck.epoch;
  const std::vector<Parameter*> params = t.model_.parameters();
  auto find = [](const std::vector<NamedTensor>& blocks, const std::string& name) -> const Tensor* {
    for (const NamedTensor& b : blocks)
      if (b.name == name) return &b.value;
    return nullptr;
  };
  if (ck.parameters.size() != params.size()) {
    throw FormatError(fmt::format("checkpoint has {} parameter blocks, model expects {}",
                                  ck.parameters.size(), params.size()));
  }
  for (Parameter* p : params) {
    const Tensor* v = find(ck.parameters, p->name);
    if (!v || v->shape() != p->value.shape()) {
      throw FormatError(fmt::format("checkpoint block '{}' missing or misshapen", p->name));
    }
    p->value = *v;
  }
  if (!ck.momentum.empty()) {
    if (ck.momentum.size() != params.size()) {
      throw FormatError("checkpoint momentum blocks do not cover every parameter");
    }
    for (Parameter* p : params) {
      const Tensor* v = find(ck.momentum, "momentum/" + p->name);
      if (!v || v->shape() != p->value.shape()) {
        throw FormatError(fmt::format("checkpoint block 'momentum/{}' missing or misshapen", p->name));
      }
      t.opt_.velocity().push_back(*v);
    }
  }
  return t;
}

TrainResult train(const TrainConfig& cfg, const DatasetSplits& data) {
  if (data.train.size() == 0 || data.test.size() == 0) throw ConfigError("empty dataset split");
  Trainer t(cfg, DataShape::of(data.train));
  TrainResult r;
  r.metrics = t.fit(data.train, data.test);
  r.iterations = t.iterations();
  return r;
}

}  // namespace taaf
