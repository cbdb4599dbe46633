#pragma once

#include "symflow/flow/velocity_model.hpp"
#include "symflow/priors.hpp"
#include "symflow/rng.hpp"
#include "symflow/symmetry/matching.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace symflow::flow {

/// One training tuple of the conditional flow-matching objective.
struct FlowBatch {
  Vector x0;    // prior sample
  Vector x1;    // target, possibly replaced by its symmetric match
  Vector cond;  // may be empty
  double t = 0.0;
};

/// Linear path (1 - t) x0 + t x1.
Vector interpolate(const Vector& x0, const Vector& x1, double t);

/// Mean over the batch of ||v(x_t, t, cond) - (x1 - x0)||^2.
double cfm_loss(const VelocityModel& model, std::span<const FlowBatch> batch);

/// Replaces every x1 by its symmetric match against the pair's x0.
std::vector<FlowBatch> matched_dataset_view(std::span<const FlowBatch> pairs,
                                            const sym::Matcher& matcher);

/// Training targets. Either a fixed table (targets/conds, one row per record)
/// or a stream that draws fresh pairs; a streamed epoch is a single batch.
struct TrainingSet {
  Matrix targets;
  Matrix conds;
  std::function<void(Rng&, Matrix& targets, Matrix& conds)> stream;

  bool streaming() const { return static_cast<bool>(stream); }
  std::size_t size() const { return static_cast<std::size_t>(targets.rows()); }
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  double learning_rate = 1e-3;
  /// Cosine decay of the learning rate down to this fraction at the last step.
  double final_lr_fraction = 1.0;
  std::uint64_t seed = 0;
  /// Train at a single time instead of t ~ U[0, 1]. With a zero prior and
  /// fixed_time = 0 the objective is plain regression of the target.
  std::optional<double> fixed_time;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double wall_time_s = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> history;
  std::int64_t steps = 0;
};

/// Trains `model` in place. Each pair gets its own prior draw and uniform t;
/// the matcher picks the target before the loss is taken. Deterministic in
/// config.seed. Throws NumericalError on a non-finite loss.
TrainResult train(VelocityModel& model, const TrainingSet& data, const prior::Prior& prior,
                  const sym::Matcher& matcher, const TrainConfig& config);

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLog>& history);

enum class Integrator { euler, midpoint };

struct SamplerConfig {
  int num_steps = 100;
  Integrator integrator = Integrator::euler;
};

/// Integrates dx/dt = v(x, t, cond) from t = 0 to 1.
Vector sample(const VelocityModel& model, const Vector& x0, const Vector& cond,
              const SamplerConfig& config = {});
/// Batched version; row i of `conds` conditions row i of `x0`.
Matrix sample_batch(const VelocityModel& model, const Matrix& x0, const Matrix& conds,
                    const SamplerConfig& config = {});

}  // namespace symflow::flow
