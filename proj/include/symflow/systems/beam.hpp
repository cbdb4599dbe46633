#pragma once

#include "symflow/rng.hpp"
#include "symflow/types.hpp"

#include <cstdint>
#include <vector>

namespace symflow::systems {

inline constexpr int kBeamMinSegments = 2;
inline constexpr int kBeamMaxSegments = 11;
inline constexpr int kBeamSteps = 200;

/// Chain of n segments with lengths L, axial stiffnesses C and rotational
/// stiffnesses K (K[i] acts at the bottom joint of segment i).
struct BeamSpec {
  int n = 0;
  std::vector<double> L, C, K;

  void validate() const;
  double total_length() const;
  /// n uniform on {2..11}; L, C, K log-uniform on [0.5, 2].
  static BeamSpec sample(Rng& rng);
  static BeamSpec uniform(int n, double L, double C, double K);
};

/// Segment angles from vertical, Hencky strains, and the multiplier of the
/// displacement constraint.
struct BeamState {
  Vector q;
  Vector eps;
  double lambda = 0.0;

  static BeamState rest(int n);
  BeamState reflected() const;
};

struct BeamSolverOptions {
  int max_iterations = 400;
  double tolerance = 1e-12;     // KKT residual (max norm)
  double perturbation = 1e-6;   // size of the eigenmode kick
  double stability_tol = 1e-10; // projected Hessian eigenvalues below -tol are unstable
};

struct BeamStepInfo {
  int iterations = 0;
  bool perturbed = false;
  int perturbation_sign = 0;
  double min_projected_eigenvalue = 0.0;
};

/// U = 1/2 [K1 q1^2 + sum_{i>=2} Ki (qi - q(i-1))^2 + sum Li Ci epsi^2].
double beam_energy(const BeamSpec& spec, const BeamState& state);
/// sum Li (1 - exp(epsi) cos qi) - d.
double beam_constraint(const BeamSpec& spec, const BeamState& state, double d);
/// Stationarity of U - lambda * g stacked with the constraint; length 2n + 1.
Vector beam_kkt_residual(const BeamSpec& spec, const BeamState& state, double d);
/// Smallest eigenvalue and eigenvector (in (q, eps) coordinates, unit norm) of
/// the Lagrangian Hessian restricted to the constraint tangent space.
std::pair<double, Vector> beam_lowest_mode(const BeamSpec& spec, const BeamState& state);

/// Newton iterations on the KKT system warm-started from `warm`. If the
/// converged point is unstable and `perturb` is set, it is kicked along the
/// lowest eigenmode with a random sign and re-solved to a stable minimum.
/// Throws NumericalError when Newton does not converge.
BeamState solve_beam_step(const BeamSpec& spec, double d, const BeamState& warm, bool perturb,
                          Rng& rng, const BeamSolverOptions& options = {},
                          BeamStepInfo* info = nullptr);

/// Node coordinates (n + 1 rows of (x, y)), node 0 at the origin.
Matrix beam_positions(const BeamSpec& spec, const BeamState& state);

struct BeamTrajectory {
  BeamSpec spec;
  std::vector<double> d_schedule;
  std::vector<BeamState> states;
  std::vector<Matrix> positions;
  int buckling_step = -1;  // first step at which symmetry was broken
  int direction = 0;       // sign of the top node's final x-coordinate
};

/// Solves the beam for d = linspace(0, sum L, steps).
BeamTrajectory solve_beam_trajectory(const BeamSpec& spec, Rng& rng, int steps = kBeamSteps,
                                     const BeamSolverOptions& options = {});

/// Beam i is sampled and solved with Rng(seed, i).
std::vector<BeamTrajectory> gen_beam_dataset(std::size_t n_beams, std::uint64_t seed,
                                             int steps = kBeamSteps);

}  // namespace symflow::systems
