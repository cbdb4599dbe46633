#include "symflow/flow/flow.hpp"

#include "symflow/nn/adam.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace symflow::flow {

Vector interpolate(const Vector& x0, const Vector& x1, double t) {
  require_shape(x0.size() == x1.size(), "interpolate: x0/x1 length mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolate: t outside [0, 1]");
  return (1.0 - t) * x0 + t * x1;
}

double cfm_loss(const VelocityModel& model, std::span<const FlowBatch> batch) {
  if (batch.empty()) throw std::invalid_argument("cfm_loss: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto d = static_cast<Eigen::Index>(model.dim());
  const auto c = static_cast<Eigen::Index>(model.cond_dim());
  Matrix xt(n, d), target(n, d), cond(n, c);
  Vector t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = batch[static_cast<std::size_t>(i)];
    require_shape(b.x0.size() == d && b.x1.size() == d, "cfm_loss: sample length mismatch");
    require_shape(b.cond.size() == c, "cfm_loss: condition length mismatch");
    xt.row(i) = interpolate(b.x0, b.x1, b.t).transpose();
    target.row(i) = (b.x1 - b.x0).transpose();
    cond.row(i) = b.cond.transpose();
    t[i] = b.t;
  }
  const Matrix v = model.forward(xt, t, cond);
  return (v - target).squaredNorm() / static_cast<double>(n);
}

std::vector<FlowBatch> matched_dataset_view(std::span<const FlowBatch> pairs,
                                            const sym::Matcher& matcher) {
  std::vector<FlowBatch> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.x0, matcher.match(p.x0, p.x1, p.cond), p.cond, p.t});
  }
  return out;
}

TrainResult train(VelocityModel& model, const TrainingSet& data, const prior::Prior& prior,
                  const sym::Matcher& matcher, const TrainConfig& config) {
  if (!data.streaming() && data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (config.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  const auto d = static_cast<Eigen::Index>(model.dim());
  const auto c = static_cast<Eigen::Index>(model.cond_dim());
  require_shape(prior.dim() == model.dim(), "train: prior and model dimensions differ");
  if (!data.streaming()) {
    require_shape(data.targets.cols() == d && data.conds.cols() == c &&
                      data.conds.rows() == data.targets.rows(),
                  "train: dataset shape does not match the model");
  }

  Rng rng(config.seed, 0x7261696eULL);
  auto adam = nn::AdamState::fresh(model.params().size(), config.learning_rate);
  ParamVector grad(model.params().size());
  std::vector<std::size_t> order(data.streaming() ? 0 : data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  if (config.fixed_time && !(*config.fixed_time >= 0.0 && *config.fixed_time <= 1.0)) {
    throw std::invalid_argument("train: fixed_time outside [0, 1]");
  }
  const std::size_t per_epoch = data.streaming() ? 1 : (data.size() + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(per_epoch) * config.epochs;

  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  Matrix stream_targets, stream_conds;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Matrix* targets = &data.targets;
    const Matrix* conds = &data.conds;
    std::size_t epoch_size = data.size();
    if (data.streaming()) {
      data.stream(rng, stream_targets, stream_conds);
      require_shape(stream_targets.cols() == d && stream_conds.cols() == c,
                    "train: streamed pairs do not match the model");
      targets = &stream_targets;
      conds = &stream_conds;
      epoch_size = static_cast<std::size_t>(stream_targets.rows());
      order.resize(epoch_size);
      std::iota(order.begin(), order.end(), std::size_t{0});
    } else {
      // Fisher-Yates with our own generator keeps the order portable.
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(i) - 1))]);
      }
    }

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < epoch_size; begin += static_cast<std::size_t>(config.batch_size)) {
      const auto n = static_cast<Eigen::Index>(
          std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), epoch_size - begin));
      Matrix xt(n, d), velocity_target(n, d), cond(n, c);
      Vector t(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t rec = order[begin + static_cast<std::size_t>(i)];
        const Vector cv = conds->row(static_cast<Eigen::Index>(rec)).transpose();
        const Vector x1 = targets->row(static_cast<Eigen::Index>(rec)).transpose();
        const Vector x0 = prior.sample(cv, rng);
        const Vector matched = matcher.match(x0, x1, cv);
        t[i] = config.fixed_time ? *config.fixed_time : rng.uniform();
        xt.row(i) = ((1.0 - t[i]) * x0 + t[i] * matched).transpose();
        velocity_target.row(i) = (matched - x0).transpose();
        cond.row(i) = cv.transpose();
      }
      std::unique_ptr<Tape> tape;
      const Matrix v = model.forward(xt, t, cond, &tape);
      const Matrix diff = v - velocity_target;
      const double loss = diff.squaredNorm() / static_cast<double>(n);
      if (!std::isfinite(loss)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(result.steps));
      }
      if (config.final_lr_fraction != 1.0 && total_steps > 1) {
        const double progress = static_cast<double>(result.steps) / (total_steps - 1.0);
        const double f = config.final_lr_fraction;
        adam.learning_rate = config.learning_rate * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
      }
      grad.setZero();
      model.backward(*tape, (2.0 / static_cast<double>(n)) * diff, as_span(grad));
      nn::adam_step(model.params(), grad, adam);
      loss_sum += loss;
      ++batches;
      ++result.steps;
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back({epoch, loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1)), elapsed});
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLog>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,mean_loss,wall_time_s\n";
  out.precision(17);
  for (const auto& row : history) out << row.epoch << ',' << row.mean_loss << ',' << row.wall_time_s << '\n';
}

Vector sample(const VelocityModel& model, const Vector& x0, const Vector& cond,
              const SamplerConfig& config) {
  Matrix x = x0.transpose();
  Matrix c = cond.transpose();
  return sample_batch(model, x, c, config).row(0).transpose();
}

Matrix sample_batch(const VelocityModel& model, const Matrix& x0, const Matrix& conds,
                    const SamplerConfig& config) {
  if (config.num_steps < 1) throw std::invalid_argument("sampler: num_steps must be >= 1");
  require_shape(static_cast<std::size_t>(x0.cols()) == model.dim(), "sampler: state width mismatch");
  require_shape(conds.rows() == x0.rows(), "sampler: one condition row per sample required");
  const double dt = 1.0 / config.num_steps;
  Matrix x = x0;
  for (int step = 0; step < config.num_steps; ++step) {
    const double t = step * dt;
    const Vector tv = Vector::Constant(x.rows(), t);
    const Matrix v = model.forward(x, tv, conds);
    if (config.integrator == Integrator::euler) {
      x += dt * v;
    } else {
      const Matrix mid = x + (0.5 * dt) * v;
      const Vector tm = Vector::Constant(x.rows(), t + 0.5 * dt);
      x += dt * model.forward(mid, tm, conds);
    }
    if (!x.allFinite()) {
      throw NumericalError("sampler: non-finite state at step " + std::to_string(step));
    }
  }
  return x;
}

}  // namespace symflow::flow
