#include "symflow/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace symflow::metrics {

TargetDistribution TargetDistribution::uniform(const std::vector<Vector>& outcomes) {
  TargetDistribution d;
  for (const auto& o : outcomes) {
    auto same = [&](const Vector& v) { return v.size() == o.size() && v == o; };
    const auto it = std::find_if(d.outcomes.begin(), d.outcomes.end(), same);
    if (it == d.outcomes.end()) {
      d.outcomes.push_back(o);
      d.weights.push_back(1.0);
    } else {
      d.weights[static_cast<std::size_t>(it - d.outcomes.begin())] += 1.0;
    }
  }
  for (double& w : d.weights) w /= static_cast<double>(outcomes.size());
  return d;
}

void TargetDistribution::validate() const {
  if (outcomes.empty()) throw ShapeError("target distribution: no outcomes");
  require_shape(outcomes.size() == weights.size(), "target distribution: one weight per outcome");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0)) throw ShapeError("target distribution: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ShapeError("target distribution: weights must sum to 1");
  for (const auto& o : outcomes) require_shape(o.size() == outcomes.front().size(), "target distribution: ragged outcomes");
}

double wasserstein_1d(std::span<const double> samples, const TargetDistribution& target) {
  if (samples.empty()) throw ShapeError("wasserstein_1d: no samples");
  target.validate();
  for (const auto& o : target.outcomes) require_shape(o.size() == 1, "wasserstein_1d: scalar outcomes required");

  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  std::vector<std::size_t> order(target.outcomes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return target.outcomes[a][0] < target.outcomes[b][0]; });

  // Walk both quantile functions over [0, 1] in merged breakpoint order.
  const double w_sample = 1.0 / static_cast<double>(xs.size());
  std::size_t i = 0, k = 0;
  double left_sample = w_sample, left_target = target.weights[order[0]];
  double total = 0.0;
  while (i < xs.size() && k < order.size()) {
    const double mass = std::min(left_sample, left_target);
    total += mass * std::abs(xs[i] - target.outcomes[order[k]][0]);
    left_sample -= mass;
    left_target -= mass;
    if (left_sample <= 1e-15) {
      ++i;
      left_sample = w_sample;
    }
    if (left_target <= 1e-15 && k + 1 < order.size()) {
      ++k;
      left_target = target.weights[order[k]];
    } else if (left_target <= 1e-15) {
      break;
    }
  }
  return total;
}

std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  require_shape(cost.rows() == cost.cols(), "hungarian: cost matrix must be square");
  if (n == 0) return {};
  // Potentials formulation, O(n^3); arrays are 1-based with 0 as a sentinel.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match_col[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t r0 = match_col[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = cost(static_cast<Eigen::Index>(r0 - 1), static_cast<Eigen::Index>(c - 1)) - u[r0] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      if (!std::isfinite(delta)) throw NumericalError("hungarian: non-finite cost");
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match_col[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match_col[col0] = match_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> result(n);
  for (std::size_t c = 1; c <= n; ++c) result[match_col[c] - 1] = c - 1;
  return result;
}

std::vector<std::size_t> replication_counts(const std::vector<double>& weights, std::size_t n) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<double> remainder(weights.size());
  std::size_t used = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = weights[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[k] = exact - static_cast<double>(counts[k]);
    used += counts[k];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; used < n; ++i, ++used) ++counts[order[i % order.size()]];
  return counts;
}

double wasserstein_assignment(const std::vector<Vector>& samples, const TargetDistribution& target) {
  if (samples.empty()) throw ShapeError("wasserstein_assignment: no samples");
  target.validate();
  const std::size_t n = samples.size();
  const auto dim = target.outcomes.front().size();
  for (const auto& s : samples) require_shape(s.size() == dim, "wasserstein_assignment: sample dimension mismatch");
  const auto counts = replication_counts(target.weights, n);
  std::vector<const Vector*> atoms;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t r = 0; r < counts[k]; ++r) atoms.push_back(&target.outcomes[k]);
  }
  // Distances to each distinct outcome, then expanded to the replicas.
  Eigen::MatrixXd dist(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(target.outcomes.size()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < target.outcomes.size(); ++k) {
      dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (samples[i] - target.outcomes[k]).norm();
    }
  }
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::size_t col = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t r = 0; r < counts[k]; ++r, ++col) cost.col(static_cast<Eigen::Index>(col)) = dist.col(static_cast<Eigen::Index>(k));
  }
  const auto assignment = hungarian(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment[i]));
  return total / static_cast<double>(n);
}

double ac_residual(const systems::ACConfig& config, const Matrix& u) {
  require_shape(u.cols() == config.nx, "ac_residual: field width must equal nx");
  require_shape(u.rows() == config.num_saved(), "ac_residual: slice count does not match the configuration");
  const double h = config.dt * config.save_stride;
  const double e2 = config.epsilon * config.epsilon;
  const double dx = config.dx();
  double total = 0.0;
  for (Eigen::Index t = 0; t + 1 < u.rows(); ++t) {
    const Vector cur = u.row(t).transpose();
    const Vector next = u.row(t + 1).transpose();
    const Vector lap = systems::ac_laplacian(next, dx);
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
      const double f = cur[i] * cur[i] * cur[i] - config.mu * cur[i];
      const double r = (next[i] - cur[i]) / h - e2 * lap[i] + f;
      total += r * r;
    }
  }
  return total;
}

double ac_residual(const systems::ACTrajectory& trajectory) { return ac_residual(trajectory.config, trajectory.u); }

std::vector<BifurcationPoint> bifurcation_statistics(const FinalFieldSampler& sampler,
                                                     const std::vector<double>& mu_values,
                                                     double epsilon, std::size_t n_samples) {
  std::vector<BifurcationPoint> out;
  for (double mu : mu_values) {
    const Matrix fields = sampler(mu, epsilon, n_samples);
    BifurcationPoint p;
    p.mu = mu;
    for (Eigen::Index r = 0; r < fields.rows(); ++r) p.statistics.push_back(fields.row(r).mean());
    out.push_back(std::move(p));
  }
  return out;
}

void write_bifurcation_csv(const std::string& path, const std::vector<BifurcationPoint>& points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "mu,sample,statistic\n";
  out.precision(17);
  for (const auto& p : points) {
    for (std::size_t i = 0; i < p.statistics.size(); ++i) out << p.mu << ',' << i << ',' << p.statistics[i] << '\n';
  }
}

}  // namespace symflow::metrics
