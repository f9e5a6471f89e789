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

#include "taaf/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "taaf/checkpoint.hpp"
#include "taaf/dataset.hpp"
#include "taaf/energy.hpp"
#include "taaf/error.hpp"
#include "taaf/train.hpp"

namespace taaf {

namespace fs = std::filesystem;
using nlohmann::json;

void configure_logging() {
  auto logger = spdlog::get("taaf");
  if (!logger) logger = spdlog::stderr_logger_mt("taaf");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("TAAF_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("TAAF_LOG='{}' not recognised, using info", level);
  }
}

namespace {

json metrics_object(const EpochMetrics& m) {
  return {{"acc_fused", m.acc_fused}, {"acc_m1", m.acc_m1}, {"acc_m2", m.acc_m2},
          {"loss_f", m.loss_f},       {"loss_m1", m.loss_m1}, {"loss_m2", m.loss_m2},
          {"k_m1", m.k_m1},           {"k_m2", m.k_m2},       {"rho_m1", m.rho_m1},
          {"alpha_entropy_f", m.alpha_entropy_f}};
}

int run_synth(const fs::path& config, const fs::path& out_dir, std::ostream& out) {
  const SynthConfig cfg = load_synth_config(config);
  const DatasetSplits splits = generate_to_disk(cfg, out_dir);
  out << fmt::format("wrote {} train and {} test samples to {}\n", splits.train.size(),
                     splits.test.size(), out_dir.string());
  return kExitOk;
}

int run_train(const fs::path& config, const fs::path& data, const fs::path& out_dir,
              std::optional<std::uint64_t> seed, std::ostream& out) {
  TrainConfig cfg = load_train_config(config);
  if (seed) cfg.seed = *seed;
  const DatasetSplits splits = load_dataset(data);
  fs::create_directories(out_dir);
  cfg.metrics_path = (out_dir / "metrics.csv").string();
  fs::remove(cfg.metrics_path);
  Trainer trainer(cfg, DataShape::of(splits.train));
  const std::vector<EpochMetrics> rows = trainer.fit(splits.train, splits.test);
  save_checkpoint(out_dir / "checkpoint.bin", trainer.checkpoint());
  const EpochMetrics& last = rows.back();
  out << fmt::format("trained {} epochs; test acc fused {:.4f} m1 {:.4f} m2 {:.4f}\n",
                     trainer.epochs_done(), last.acc_fused, last.acc_m1, last.acc_m2);
  return kExitOk;
}

Trainer trainer_for(const fs::path& checkpoint, const DatasetSplits& splits) {
  Trainer t = Trainer::restore(load_checkpoint(checkpoint));
  if (DataShape::of(splits.test) != t.data_shape()) {
    throw FormatError("dataset shapes do not match the checkpoint");
  }
  return t;
}

int run_eval(const fs::path& checkpoint, const fs::path& data, std::ostream& out) {
  const DatasetSplits splits = load_dataset(data);
  Trainer t = trainer_for(checkpoint, splits);
  const std::size_t epoch = t.epochs_done();
  const LossConfig& loss = t.config().loss;
  out << kMetricsHeader << '\n';
  out << metrics_csv_row(evaluate(t.model(), splits.train, loss, false, epoch, "train")) << '\n';
  out << metrics_csv_row(evaluate(t.model(), splits.test, loss, false, epoch, "test")) << '\n';
  return kExitOk;
}

int run_report(const fs::path& metrics, const std::string& format, std::ostream& out) {
  const std::vector<EpochMetrics> rows = read_metrics_csv(metrics);
  if (format == "csv") {
    out << kMetricsHeader << '\n';
    for (const EpochMetrics& m : rows) out << metrics_csv_row(m) << '\n';
    return kExitOk;
  }
  std::map<std::size_t, json> by_epoch;
  for (const EpochMetrics& m : rows) {
    json& e = by_epoch[m.epoch];
    e["epoch"] = m.epoch;
    e[m.split] = metrics_object(m);
  }
  json arr = json::array();
  for (auto& [epoch, obj] : by_epoch) arr.push_back(std::move(obj));
  out << arr.dump(2) << '\n';
  return kExitOk;
}

int run_energy(const fs::path& checkpoint, const fs::path& data, std::ostream& out) {
  const DatasetSplits splits = load_dataset(data);
  Trainer t = trainer_for(checkpoint, splits);
  const OpCounts counts = count_ops(t.model(), splits.test);
  const EnergyModel em;
  const EnergyEstimate e = estimate_energy(counts, em);
  json layers = json::array();
  for (const LayerOps& l : counts.layers) {
    layers.push_back({{"name", l.name},
                      {"spiking_input", l.spiking_input},
                      {"synops", l.synops},
                      {"snn_macs", l.snn_macs},
                      {"ann_macs", l.ann_macs}});
  }
  const json doc = {{"samples", splits.test.size()},
                    {"synops", counts.synops},
                    {"snn_macs", counts.snn_macs},
                    {"ann_macs", counts.ann_macs},
                    {"e_ac_joules", em.e_ac},
                    {"e_mac_joules", em.e_mac},
                    {"e_snn_joules", e.e_snn},
                    {"e_ann_joules", e.e_ann},
                    {"ratio", e.ratio},
                    {"layers", layers}};
  out << doc.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spiking multimodal fusion with temporal attention", "taaf"};
  app.require_subcommand(1);

  std::string config, out_dir, data, checkpoint, metrics, format = "csv";
  std::uint64_t seed = 0;

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic two-modality dataset");
  synth->add_option("--config", config, "Synth config JSON")->required();
  synth->add_option("--out", out_dir, "Output dataset directory")->required();

  CLI::App* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config, "Train config JSON")->required();
  train->add_option("--data", data, "Dataset directory")->required();
  train->add_option("--out", out_dir, "Output directory for checkpoint.bin and metrics.csv")
      ->required();
  CLI::Option* seed_opt = train->add_option("--seed", seed, "Overrides the config seed");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on both splits");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data, "Dataset directory")->required();

  CLI::App* report = app.add_subcommand("report", "Emit the metrics trajectory table");
  report->add_option("--metrics", metrics, "Metrics CSV")->required();
  report->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* energy = app.add_subcommand("energy", "Estimate inference energy on the test split");
  energy->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  energy->add_option("--data", data, "Dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*synth) return run_synth(config, out_dir, out);
    if (*train) {
      const auto s = seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt;
      return run_train(config, data, out_dir, s, out);
    }
    if (*eval) return run_eval(checkpoint, data, out);
    if (*report) return run_report(metrics, format, out);
    if (*energy) return run_energy(checkpoint, data, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

int cli_main(int argc, const char* const* argv) {
  return cli_main(argc, argv, std::cout, std::cerr);
}

}  // namespace taaf
