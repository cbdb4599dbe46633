#include "symflow/systems/allen_cahn.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace symflow::systems {

void ACConfig::validate() const {
  if (nx < 3) throw ConfigError("allen_cahn: nx must be at least 3");
  if (!(dt > 0) || !(length > 0) || !(t_end > 0)) throw ConfigError("allen_cahn: dt, length, t_end must be positive");
  if (!(epsilon > 0)) throw ConfigError("allen_cahn: epsilon must be positive");
  if (!(init_noise_sigma >= 0)) throw ConfigError("allen_cahn: init_noise_sigma must be non-negative");
  if (save_stride < 1) throw ConfigError("allen_cahn: save_stride must be >= 1");
  if (num_steps() % save_stride != 0) throw ConfigError("allen_cahn: save_stride must divide the step count");
}

int ACConfig::num_steps() const { return static_cast<int>(std::lround(t_end / dt)); }

ACConfig ACConfig::sample(Rng& rng) {
  ACConfig c;
  c.epsilon = rng.log_uniform(0.001, 0.1);
  c.mu = rng.uniform(-0.1, 1.0);
  return c;
}

ACStepper::ACStepper(const ACConfig& config) : config_(config) {
  config_.validate();
  const int n = config_.nx;
  const long double pi = std::numbers::pi_v<long double>;
  const long double dx = static_cast<long double>(config_.length) / n;
  const long double a = static_cast<long double>(config_.dt) * config_.epsilon * config_.epsilon;
  std::vector<long double> symbol(n);
  for (int m = 0; m < n; ++m) {
    const long double s = std::sin(pi * m / n);
    symbol[m] = 1.0L / (1.0L + a * 4.0L * s * s / (dx * dx));
  }
  kernel_.resize(n);
  for (int k = 0; k < n; ++k) {
    long double acc = 0.0L;
    for (int m = 0; m < n; ++m) {
      acc += symbol[m] * std::cos(2.0L * pi * static_cast<long double>((static_cast<long long>(m) * k) % n) / n);
    }
    kernel_[k] = static_cast<double>(acc / n);
  }
}

Vector ACStepper::step(const Vector& u) const {
  const int n = config_.nx;
  require_shape(u.size() == n, "allen_cahn: field length must equal nx");
  Vector rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = u[i] - config_.dt * (u[i] * u[i] * u[i] - config_.mu * u[i]);
  Vector out(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      int j = i - k;
      if (j < 0) j += n;
      acc += kernel_[k] * rhs[j];
    }
    out[i] = acc;
  }
  return out;
}

double ac_energy(const ACConfig& config, std::span<const double> u) {
  const std::size_t n = u.size();
  const double dx = config.length / static_cast<double>(n);
  const double e2 = config.epsilon * config.epsilon;
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double grad = (u[(i + 1) % n] - u[i]) / dx;
    const double well = u[i] * u[i] - config.mu;
    e += 0.5 * e2 * grad * grad + 0.25 * well * well;
  }
  return dx * e;
}

Vector ac_laplacian(const Vector& u, double dx) {
  const Eigen::Index n = u.size();
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = (u[(i + 1) % n] - 2.0 * u[i] + u[(i + n - 1) % n]) / (dx * dx);
  }
  return out;
}

ACTrajectory solve_allen_cahn_from(const ACConfig& config, const Vector& u0, std::vector<double>* energies) {
  const ACStepper stepper(config);
  require_shape(u0.size() == config.nx, "allen_cahn: initial field length must equal nx");
  ACTrajectory traj;
  traj.config = config;
  traj.u.resize(config.num_saved(), config.nx);
  traj.u.row(0) = u0.transpose();
  if (energies) {
    energies->clear();
    energies->push_back(ac_energy(config, {u0.data(), static_cast<std::size_t>(u0.size())}));
  }
  Vector u = u0;
  const int steps = config.num_steps();
  for (int s = 1; s <= steps; ++s) {
    u = stepper.step(u);
    if (!u.allFinite()) {
      std::ostringstream msg;
      msg << "allen_cahn: non-finite field at step " << s;
      throw NumericalError(msg.str());
    }
    if (energies) energies->push_back(ac_energy(config, {u.data(), static_cast<std::size_t>(u.size())}));
    if (s % config.save_stride == 0) traj.u.row(s / config.save_stride) = u.transpose();
  }
  return traj;
}

ACTrajectory solve_allen_cahn(const ACConfig& config, Rng& rng) {
  config.validate();
  Vector u0(config.nx);
  for (int i = 0; i < config.nx; ++i) u0[i] = rng.normal(0.0, config.init_noise_sigma);
  return solve_allen_cahn_from(config, u0);
}

std::vector<ACTrajectory> gen_ac_dataset(std::size_t n_traj, std::uint64_t seed, int save_stride) {
  std::vector<ACTrajectory> out;
  out.reserve(n_traj);
  for (std::size_t i = 0; i < n_traj; ++i) {
    Rng rng(seed, i);
    ACConfig c = ACConfig::sample(rng);
    c.save_stride = save_stride;
    out.push_back(solve_allen_cahn(c, rng));
  }
  return out;
}

}  // namespace symflow::systems
