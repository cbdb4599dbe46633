#include "symflow/systems/beam.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace symflow::systems {

namespace {

using Eigen::Index;

struct Derivatives {
  Vector grad_u;    // dU/dw, w = (q, eps)
  Vector grad_g;    // dg/dw
  Eigen::MatrixXd hess_l;  // Hessian of U - lambda g with respect to w
  double g = 0.0;
};

Derivatives derivatives(const BeamSpec& s, const BeamState& st, double d, bool with_hessian) {
  const Index n = s.n;
  Derivatives out;
  out.grad_u = Vector::Zero(2 * n);
  out.grad_g = Vector::Zero(2 * n);
  out.g = -d;
  for (Index i = 0; i < n; ++i) {
    const double below = i > 0 ? st.q[i - 1] : 0.0;
    out.grad_u[i] += s.K[i] * (st.q[i] - below);
    if (i > 0) out.grad_u[i - 1] -= s.K[i] * (st.q[i] - below);
    out.grad_u[n + i] = s.L[i] * s.C[i] * st.eps[i];
    const double stretch = s.L[i] * std::exp(st.eps[i]);
    out.grad_g[i] = stretch * std::sin(st.q[i]);
    out.grad_g[n + i] = -stretch * std::cos(st.q[i]);
    out.g += s.L[i] - stretch * std::cos(st.q[i]);
  }
  if (with_hessian) {
    auto& h = out.hess_l;
    h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Index i = 0; i < n; ++i) {
      h(i, i) += s.K[i];
      if (i > 0) {
        h(i - 1, i - 1) += s.K[i];
        h(i - 1, i) -= s.K[i];
        h(i, i - 1) -= s.K[i];
      }
      const double stretch = s.L[i] * std::exp(st.eps[i]);
      const double c = stretch * std::cos(st.q[i]);
      const double sn = stretch * std::sin(st.q[i]);
      // Second derivatives of g: qq = c, q-eps = sn, eps-eps = -c.
      h(i, i) -= st.lambda * c;
      h(i, n + i) -= st.lambda * sn;
      h(n + i, i) -= st.lambda * sn;
      h(n + i, n + i) += s.L[i] * s.C[i] + st.lambda * c;
    }
  }
  return out;
}

Vector kkt_residual(const Derivatives& dv, double lambda) {
  const Index m = dv.grad_u.size();
  Vector f(m + 1);
  f.head(m) = dv.grad_u - lambda * dv.grad_g;
  f[m] = -dv.g;
  return f;
}

// Orthonormal basis of the tangent space {w : grad_g . w = 0}.
Eigen::MatrixXd tangent_basis(const Vector& grad_g) {
  const Index m = grad_g.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(grad_g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  return q.rightCols(m - 1);
}

std::pair<double, Vector> lowest_mode(const Derivatives& dv) {
  const Eigen::MatrixXd z = tangent_basis(dv.grad_g);
  const Eigen::MatrixXd projected = z.transpose() * dv.hess_l * z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (projected + projected.transpose()));
  Vector mode = z * eig.eigenvectors().col(0);
  mode.normalize();
  // Fix the arbitrary eigenvector sign: largest-magnitude entry positive.
  Index arg = 0;
  mode.cwiseAbs().maxCoeff(&arg);
  if (mode[arg] < 0) mode = -mode;
  return {eig.eigenvalues()[0], mode};
}

Vector newton_step(const Derivatives& dv, const Vector& f, double shift) {
  const Index m = dv.grad_g.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(m + 1, m + 1);
  j.topLeftCorner(m, m) = dv.hess_l;
  j.topLeftCorner(m, m).diagonal().array() += shift;
  j.block(0, m, m, 1) = -dv.grad_g;
  j.block(m, 0, 1, m) = -dv.grad_g.transpose();
  return Eigen::FullPivLU<Eigen::MatrixXd>(j).solve(-f);
}

BeamState advance(const BeamState& st, const Vector& step, double alpha) {
  const Index n = st.q.size();
  BeamState next = st;
  next.q += alpha * step.head(n);
  next.eps += alpha * step.segment(n, n);
  next.lambda += alpha * step[2 * n];
  return next;
}

std::string diagnostics(double d, int iterations, double residual) {
  std::ostringstream msg;
  msg << "beam Newton did not converge at d = " << d << " after " << iterations
      << " iterations (KKT residual " << residual << ")";
  return msg.str();
}

// Newton on the KKT system. Where the tangent Hessian is indefinite the primal
// block is shifted to make it positive definite, which turns the step into a
// descent step for the energy and moves away from saddle points.
BeamState newton(const BeamSpec& spec, double d, BeamState st, bool seek_minimum,
                 const BeamSolverOptions& opt, int& iterations) {
  for (iterations = 0; iterations < opt.max_iterations; ++iterations) {
    Derivatives dv = derivatives(spec, st, d, true);
    const Vector f = kkt_residual(dv, st.lambda);
    const double res = f.lpNorm<Eigen::Infinity>();
    double shift = 0.0;
    if (seek_minimum) {
      const double mu = lowest_mode(dv).first;
      if (mu < -opt.stability_tol) shift = -2.0 * mu + 1e-9;
    }
    if (res < opt.tolerance && shift == 0.0) return st;

    Vector step = newton_step(dv, f, shift);
    if (!step.allFinite()) throw NumericalError(diagnostics(d, iterations, res));
    const double largest = step.head(2 * spec.n).lpNorm<Eigen::Infinity>();
    double alpha = largest > 0.2 ? 0.2 / largest : 1.0;

    if (shift == 0.0) {
      // Damped Newton: halve while the residual grows.
      for (int k = 0; k < 30; ++k) {
        const BeamState trial = advance(st, step, alpha);
        const double r = beam_kkt_residual(spec, trial, d).lpNorm<Eigen::Infinity>();
        if (std::isfinite(r) && r < res) break;
        alpha *= 0.5;
      }
    }
    st = advance(st, step, alpha);
  }
  const double res = beam_kkt_residual(spec, st, d).lpNorm<Eigen::Infinity>();
  throw NumericalError(diagnostics(d, iterations, res));
}

}  // namespace

void BeamSpec::validate() const {
  if (n < 1) throw std::invalid_argument("beam: need at least one segment");
  require_shape(static_cast<int>(L.size()) == n && static_cast<int>(C.size()) == n &&
                    static_cast<int>(K.size()) == n,
                "beam: L, C, K must each have n entries");
  for (int i = 0; i < n; ++i) {
    if (!(L[i] > 0 && C[i] > 0 && K[i] > 0)) throw std::invalid_argument("beam: parameters must be positive");
  }
}

double BeamSpec::total_length() const {
  double s = 0.0;
  for (double l : L) s += l;
  return s;
}

BeamSpec BeamSpec::sample(Rng& rng) {
  BeamSpec s;
  s.n = static_cast<int>(rng.uniform_int(kBeamMinSegments, kBeamMaxSegments));
  for (int i = 0; i < s.n; ++i) s.L.push_back(rng.log_uniform(0.5, 2.0));
  for (int i = 0; i < s.n; ++i) s.C.push_back(rng.log_uniform(0.5, 2.0));
  for (int i = 0; i < s.n; ++i) s.K.push_back(rng.log_uniform(0.5, 2.0));
  return s;
}

BeamSpec BeamSpec::uniform(int n, double L, double C, double K) {
  BeamSpec s;
  s.n = n;
  s.L.assign(static_cast<std::size_t>(n), L);
  s.C.assign(static_cast<std::size_t>(n), C);
  s.K.assign(static_cast<std::size_t>(n), K);
  return s;
}

BeamState BeamState::rest(int n) { return {Vector::Zero(n), Vector::Zero(n), 0.0}; }

BeamState BeamState::reflected() const { return {-q, eps, lambda}; }

double beam_energy(const BeamSpec& spec, const BeamState& st) {
  double u = 0.0;
  for (int i = 0; i < spec.n; ++i) {
    const double below = i > 0 ? st.q[i - 1] : 0.0;
    const double bend = st.q[i] - below;
    u += spec.K[i] * bend * bend + spec.L[i] * spec.C[i] * st.eps[i] * st.eps[i];
  }
  return 0.5 * u;
}

double beam_constraint(const BeamSpec& spec, const BeamState& st, double d) {
  double g = -d;
  for (int i = 0; i < spec.n; ++i) g += spec.L[i] * (1.0 - std::exp(st.eps[i]) * std::cos(st.q[i]));
  return g;
}

Vector beam_kkt_residual(const BeamSpec& spec, const BeamState& st, double d) {
  return kkt_residual(derivatives(spec, st, d, false), st.lambda);
}

std::pair<double, Vector> beam_lowest_mode(const BeamSpec& spec, const BeamState& st) {
  return lowest_mode(derivatives(spec, st, 0.0, true));
}

BeamState solve_beam_step(const BeamSpec& spec, double d, const BeamState& warm, bool perturb,
                          Rng& rng, const BeamSolverOptions& opt, BeamStepInfo* info) {
  spec.validate();
  const double total = spec.total_length();
  if (!(d >= 0.0 && d <= total)) {
    throw std::invalid_argument("beam: displacement must lie in [0, sum L]");
  }
  BeamState st = warm;
  if (st.q.size() != spec.n || st.eps.size() != spec.n) st = BeamState::rest(spec.n);

  BeamStepInfo local;
  int iterations = 0;
  st = newton(spec, d, st, false, opt, iterations);
  local.iterations = iterations;
  auto [mu, mode] = beam_lowest_mode(spec, st);
  if (perturb && mu < -opt.stability_tol) {
    const int sign = rng.coin() ? 1 : -1;
    const Index n = spec.n;
    st.q += sign * opt.perturbation * mode.head(n);
    st.eps += sign * opt.perturbation * mode.tail(n);
    st = newton(spec, d, st, true, opt, iterations);
    local.iterations += iterations;
    local.perturbed = true;
    local.perturbation_sign = sign;
    mu = beam_lowest_mode(spec, st).first;
  }
  local.min_projected_eigenvalue = mu;
  if (info) *info = local;
  return st;
}

Matrix beam_positions(const BeamSpec& spec, const BeamState& st) {
  Matrix pos = Matrix::Zero(spec.n + 1, 2);
  for (int i = 0; i < spec.n; ++i) {
    const double len = spec.L[i] * std::exp(st.eps[i]);
    pos(i + 1, 0) = pos(i, 0) + len * std::sin(st.q[i]);
    pos(i + 1, 1) = pos(i, 1) + len * std::cos(st.q[i]);
  }
  return pos;
}

BeamTrajectory solve_beam_trajectory(const BeamSpec& spec, Rng& rng, int steps,
                                     const BeamSolverOptions& options) {
  spec.validate();
  if (steps < 2) throw std::invalid_argument("beam trajectory needs at least two steps");
  BeamTrajectory traj;
  traj.spec = spec;
  const double total = spec.total_length();
  BeamState st = BeamState::rest(spec.n);
  for (int s = 0; s < steps; ++s) {
    // The last step puts the top node exactly on the ground.
    const double d = s + 1 == steps ? total : total * s / (steps - 1);
    BeamStepInfo info;
    st = solve_beam_step(spec, d, st, true, rng, options, &info);
    if (info.perturbed && traj.buckling_step < 0) traj.buckling_step = s;
    traj.d_schedule.push_back(d);
    traj.states.push_back(st);
    traj.positions.push_back(beam_positions(spec, st));
  }
  const double top_x = traj.positions.back()(spec.n, 0);
  traj.direction = top_x > 0 ? 1 : (top_x < 0 ? -1 : 0);
  return traj;
}

std::vector<BeamTrajectory> gen_beam_dataset(std::size_t n_beams, std::uint64_t seed, int steps) {
  std::vector<BeamTrajectory> out;
  out.reserve(n_beams);
  for (std::size_t b = 0; b < n_beams; ++b) {
    Rng rng(seed, b);
    const BeamSpec spec = BeamSpec::sample(rng);
    out.push_back(solve_beam_trajectory(spec, rng, steps));
  }
  return out;
}

}  // namespace symflow::systems
