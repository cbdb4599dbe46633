#pragma once

#include "symflow/flow/flow.hpp"
#include "symflow/metrics/metrics.hpp"
#include "symflow/models/system.hpp"
#include "symflow/systems/dataset.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace symflow::cli {

struct TrainingBlock {
  int epochs = 100;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double final_lr_fraction = 1.0;
  bool matcher = false;   // symmetric matching on/off
  bool baseline = false;  // deterministic regression instead of flow matching
  std::uint64_t seed = 0;
};

struct EvalBlock {
  std::size_t n_pred = 100;
  std::size_t max_records = 0;  // 0 evaluates the whole test split
  std::uint64_t seed = 1;
};

struct BifurcationBlock {
  std::vector<double> mu_values{-0.1, 0.0, 0.25, 0.5, 1.0};
  double epsilon = 0.1;
  std::size_t n_samples = 50;
  bool ground_truth = false;
  std::uint64_t seed = 2;
};

/// One run: dataset, architecture, training, sampling and evaluation settings.
/// Parsing rejects unknown keys at every level.
struct RunConfig {
  systems::SystemId system = systems::SystemId::two_deltas;
  systems::DatasetOptions dataset;
  nlohmann::json arch_overrides = nlohmann::json::object();
  std::optional<double> prior_sigma;  // learning-coordinate override
  TrainingBlock training;
  flow::SamplerConfig sampler;
  EvalBlock eval;
  BifurcationBlock bifurcation;
  std::filesystem::path output_dir;

  /// Defaults for `system` (training budget per system).
  static RunConfig defaults(systems::SystemId system);
  /// `output_root` is used when the document has no output_dir.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& output_root = "runs");
  nlohmann::json to_json() const;
  /// FNV-1a of the canonical JSON, hex.
  std::string hash() const;

  models::SystemSpec spec() const;
  models::ArchConfig arch() const;
  std::filesystem::path dataset_dir() const { return output_dir / "dataset"; }
  /// flow, flow_matched or baseline.
  std::string run_name() const;
  std::filesystem::path checkpoint_path() const;
};

struct TrainedModel {
  models::SystemSpec spec;
  models::ArchConfig arch;
  std::unique_ptr<flow::VelocityModel> model;
  bool baseline = false;
  bool matched = false;
  std::int64_t trained_steps = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
};

systems::Dataset generate_dataset(const RunConfig& config);

/// Trains a fresh model on the training split (two_deltas draws fresh pairs).
TrainedModel train_model(const RunConfig& config, const systems::Dataset& data,
                         flow::TrainResult* result = nullptr);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

/// n predictions for one raw input row, in raw units (one per row).
Matrix predict(const TrainedModel& model, const Vector& input, std::size_t n, Rng& rng,
               const flow::SamplerConfig& sampler = {});

/// Allowed outcomes for a test record (raw units).
metrics::TargetDistribution allowed_outcomes(systems::SystemId id, const Vector& input, const Vector& target);

struct EvalReport {
  std::string system;
  std::string metric_name;
  std::vector<std::size_t> records;
  std::vector<double> per_record;
  double mean = 0.0;
  std::string config_hash;      // run that produced the report
  std::string checkpoint_hash;  // run that trained the model

  nlohmann::json to_json() const;
};

EvalReport evaluate_system(const TrainedModel& model, const systems::Dataset& data, const EvalBlock& eval,
                           const flow::SamplerConfig& sampler = {});
void write_report(const std::filesystem::path& dir, const EvalReport& report);

/// Final-field statistics from a trained Allen-Cahn model. Refuses untrained models.
std::vector<metrics::BifurcationPoint> bifurcation_scan(const TrainedModel& model, const BifurcationBlock& block,
                                                        const flow::SamplerConfig& sampler = {});
/// Same statistics from the solver itself.
std::vector<metrics::BifurcationPoint> bifurcation_scan_ground_truth(const BifurcationBlock& block);

}  // namespace symflow::cli
