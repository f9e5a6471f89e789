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

// Training loop, optimizer, evaluation and the metrics table.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taaf/dataset.hpp"
#include "taaf/model.hpp"

namespace taaf {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::string optimizer = "sgd";
  double lr = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;

  FusionKind fusion = FusionKind::kConcatenation;
  std::size_t fused_timesteps = 0;  // 0: the shorter native T
  std::vector<std::size_t> conv_channels = {4, 8};
  std::size_t conv_kernel = 3;
  std::size_t conv_stride = 1;
  Padding conv_padding = Padding::kValid;
  std::size_t feature_width = 32;
  LifParams lif;
  std::size_t attention_width = 16;

  LossConfig loss;
  // Unset: 60% of epochs, rounded up.
  std::optional<std::size_t> modulation_end_epoch;

  bool attention_enabled = true;
  bool modulation_enabled = true;
  bool alignment_enabled = true;

  std::string metrics_path;  // empty: no CSV sink

  void validate() const;
  std::size_t resolved_modulation_end() const;
};

// Flat JSON object; unknown keys and ill-typed values throw ConfigError.
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string train_config_json(const TrainConfig& cfg);

// Shapes the model needs from the data.
struct DataShape {
  std::size_t classes = 0;
  std::size_t timesteps_m1 = 0;
  std::size_t features_m1 = 0;
  std::size_t timesteps_m2 = 0;
  std::size_t features_m2 = 0;

  static DataShape of(const Dataset& ds);
  friend bool operator==(const DataShape&, const DataShape&) = default;
};

ModelConfig make_model_config(const TrainConfig& cfg, const DataShape& shape);

bool modulation_schedule(std::size_t epoch, std::size_t end_epoch, bool enabled);
bool modulation_schedule(std::size_t epoch, const TrainConfig& cfg);

// v <- momentum * v + grad; theta <- theta - lr * v.
void optimizer_step(Tensor& theta, const Tensor& grad, Tensor& velocity, double lr,
                    double momentum);

class SgdMomentum {
 public:
  SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  // Uses each parameter's accumulated grad. Velocities are created on the
  // first call and matched to parameters by position.
  void step(std::span<Parameter* const> params);

  std::vector<Tensor>& velocity() { return velocity_; }
  const std::vector<Tensor>& velocity() const { return velocity_; }

 private:
  double lr_;
  double momentum_;
  std::vector<Tensor> velocity_;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;
  double acc_fused = 0.0;
  double acc_m1 = 0.0;
  double acc_m2 = 0.0;
  double loss_f = 0.0;
  double loss_m1 = 0.0;
  double loss_m2 = 0.0;
  double k_m1 = 1.0;
  double k_m2 = 1.0;
  double rho_m1 = 1.0;
  double alpha_entropy_f = 0.0;
};

// Whole split as one batch. Decisions use argmax_c sum_t alpha(t) O(t)[c]
// with each sample's own attention scores; ties go to the lowest class.
EpochMetrics evaluate(TaafModel& model, const Dataset& ds, const LossConfig& loss,
                      bool modulation_active, std::size_t epoch = 0,
                      const std::string& split = "test");

// One optimizer step.
struct IterationRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  bool modulation_active = false;
  double rho_m1 = 1.0;
  double rho_m2 = 1.0;
  double k_m1 = 1.0;
  double k_m2 = 1.0;
  double loss_total = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,split,acc_fused,acc_m1,acc_m2,loss_f,loss_m1,loss_m2,k_m1,k_m2,rho_m1,alpha_entropy_f";

std::string metrics_csv_row(const EpochMetrics& m);
void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> rows);
void append_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> rows);
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

struct Checkpoint;

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const DataShape& shape);

  // Trains one epoch and evaluates both splits. The train row carries the
  // epoch's mean applied k and rho; the test row's come from the split.
  std::vector<EpochMetrics> run_epoch(const Dataset& train, const Dataset& test);
  // Runs the remaining epochs; rows are also appended to metrics_path.
  std::vector<EpochMetrics> fit(const Dataset& train, const Dataset& test);

  std::size_t epochs_done() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }
  const DataShape& data_shape() const { return shape_; }
  TaafModel& model() { return model_; }
  SgdMomentum& optimizer() { return opt_; }
  const std::vector<IterationRecord>& iterations() const { return iterations_; }

  Checkpoint checkpoint();
  static Trainer restore(const Checkpoint& ck);

 private:
  void round_state();

  TrainConfig cfg_;
  DataShape shape_;
  TaafModel model_;
  SgdMomentum opt_;
  std::size_t epoch_ = 0;
  std::vector<IterationRecord> iterations_;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  std::vector<IterationRecord> iterations;
};

// Fresh Trainer over cfg.epochs; throws ConfigError on an empty split.
TrainResult train(const TrainConfig& cfg, const DatasetSplits& data);

}  // namespace taaf
