#pragma once

#include "symflow/systems/allen_cahn.hpp"
#include "symflow/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace symflow::metrics {

/// Finite weighted set of allowed outcomes.
struct TargetDistribution {
  std::vector<Vector> outcomes;
  std::vector<double> weights;

  /// Equal weights over distinct outcomes (duplicates are merged).
  static TargetDistribution uniform(const std::vector<Vector>& outcomes);
  void validate() const;
};

/// Exact W1 between the empirical distribution of `samples` and a scalar target,
/// via the quantile coupling.
double wasserstein_1d(std::span<const double> samples, const TargetDistribution& target);

/// Minimum-cost perfect matching on a square cost matrix; result[i] is the
/// column assigned to row i.
std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost);

/// Atom replication counts summing to `n`: floor(n w_k), then one extra for
/// the largest remainders (ties to the lower index).
std::vector<std::size_t> replication_counts(const std::vector<double>& weights, std::size_t n);

/// Mean Euclidean cost of the optimal assignment between the samples and
/// the target atoms replicated to the sample count.
double wasserstein_assignment(const std::vector<Vector>& samples, const TargetDistribution& target);

/// Sum over grid points and consecutive saved slices of the squared residual
/// r = (u[t+1] - u[t]) / h - eps^2 D2 u[t+1] + (u^3 - mu u)[t],
/// with h = dt * save_stride.
double ac_residual(const systems::ACConfig& config, const Matrix& u);
double ac_residual(const systems::ACTrajectory& trajectory);

struct BifurcationPoint {
  double mu = 0.0;
  std::vector<double> statistics;  // spatial mean of the final field, one per sample
};

/// Draws `n` final-time fields (one per row) for the given (mu, epsilon).
using FinalFieldSampler = std::function<Matrix(double mu, double epsilon, std::size_t n)>;

std::vector<BifurcationPoint> bifurcation_statistics(const FinalFieldSampler& sampler,
                                                     const std::vector<double>& mu_values,
                                                     double epsilon, std::size_t n_samples);
void write_bifurcation_csv(const std::string& path, const std::vector<BifurcationPoint>& points);

}  // namespace symflow::metrics
