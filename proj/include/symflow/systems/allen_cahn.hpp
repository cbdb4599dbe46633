#pragma once

#include "symflow/rng.hpp"
#include "symflow/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace symflow::systems {

/// du/dt = eps^2 u_xx - (u^3 - mu u) on a periodic grid of nx points.
struct ACConfig {
  double epsilon = 0.1;
  double mu = 1.0;
  int nx = 200;
  double length = 1.0;
  double dt = 0.1;
  double t_end = 100.0;
  double init_noise_sigma = 1e-3;
  int save_stride = 1;  // keep every save_stride-th step (step 0 always kept)

  void validate() const;
  double dx() const { return length / nx; }
  int num_steps() const;
  int num_saved() const { return num_steps() / save_stride + 1; }
  /// epsilon log-uniform on [0.001, 0.1], mu uniform on [-0.1, 1].
  static ACConfig sample(Rng& rng);
};

struct ACTrajectory {
  ACConfig config;
  Matrix u;  // num_saved x nx
};

/// One semi-implicit step (I - dt eps^2 D2) u' = u - dt (u^3 - mu u). The
/// periodic system is inverted with an exact circulant kernel, and the sum
/// runs in the same order relative to every grid point, so the step commutes
/// bit-exactly with circular shifts.
class ACStepper {
 public:
  explicit ACStepper(const ACConfig& config);
  Vector step(const Vector& u) const;
  const Vector& kernel() const { return kernel_; }

 private:
  ACConfig config_;
  Vector kernel_;
};

/// Discrete Lyapunov functional dx * sum[(eps^2/2) ((u[i+1]-u[i])/dx)^2 + (u[i]^2 - mu)^2 / 4].
double ac_energy(const ACConfig& config, std::span<const double> u);

/// Periodic second difference.
Vector ac_laplacian(const Vector& u, double dx);

/// Starts from N(0, init_noise_sigma^2) noise drawn from `rng`.
ACTrajectory solve_allen_cahn(const ACConfig& config, Rng& rng);
/// Starts from `u0`; optionally records the energy after every step (step 0 included).
ACTrajectory solve_allen_cahn_from(const ACConfig& config, const Vector& u0,
                                   std::vector<double>* energies = nullptr);

/// Trajectory i is sampled and solved with Rng(seed, i).
std::vector<ACTrajectory> gen_ac_dataset(std::size_t n_traj, std::uint64_t seed, int save_stride);

}  // namespace symflow::systems
