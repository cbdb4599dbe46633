#include "symflow/metrics/metrics.hpp"
#include "symflow/systems/allen_cahn.hpp"
#include "symflow/systems/beam.hpp"
#include "symflow/systems/toy.hpp"

#include <doctest.h>

#include <algorithm>

using namespace symflow;
using namespace symflow::systems;

namespace {

/// q = 0 branch of the beam by nested bisection: C_i eps_i = -lambda e^{eps_i}
/// per segment, lambda chosen so the constraint holds.
std::vector<double> straight_beam_oracle(const BeamSpec& s, double d) {
  auto eps_for = [&](double lambda, int i) {
    double lo = -50.0, hi = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (s.C[i] * mid + lambda * std::exp(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto g = [&](double lambda) {
    double v = -d;
    for (int i = 0; i < s.n; ++i) v += s.L[i] * (1 - std::exp(eps_for(lambda, i)));
    return v;
  };
  double lo = 0.0, hi = 1.0;
  while (g(hi) < 0) hi *= 2;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? hi : lo) = mid;
  }
  std::vector<double> eps;
  for (int i = 0; i < s.n; ++i) eps.push_back(eps_for(0.5 * (lo + hi), i));
  return eps;
}

double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(f - double(i) / n), std::abs(double(i + 1) / n - f)});
  }
  return d;
}

}  // namespace

TEST_SUITE("systems") {
  TEST_CASE("two deltas: support, fairness, independence") {
    Rng rng(1);
    const int n = 100000;
    double plus = 0, sx = 0, sy = 0, sxy = 0, sxx = 0;
    for (int i = 0; i < n; ++i) {
      const auto [x, y] = gen_two_deltas(rng);
      REQUIRE((y == 1.0 || y == -1.0));
      plus += y > 0;
      sx += x;
      sy += y;
      sxy += x * y;
      sxx += x * x;
    }
    CHECK(std::abs(plus / n - 0.5) < 0.01);
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double rho = cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) * (1 - (sy / n) * (sy / n)));
    CHECK(std::abs(rho) < 0.02);
  }

  TEST_CASE("coin flip: |y| = |x|, balanced outcomes") {
    const auto recs = gen_coin_flip(1000, 2);
    CHECK(recs.size() == 1000);
    double ratio = 0;
    for (const auto& r : recs) {
      CHECK(std::abs(r.output[0]) == std::abs(r.input[0]));
      ratio += r.output[0] / r.input[0];
      CHECK(r.matching_group.kind == sym::GroupDescriptor::Kind::sign_flip);
    }
    CHECK(std::abs(ratio / 1000) < 0.1);
  }

  TEST_CASE("three roads: worked example, collapse and frequencies") {
    const auto o = three_roads_outcomes(Vector{{1.0, 2.0}});
    CHECK(o[0] == Vector{{0.5, 2.5}});
    CHECK(o[1] == Vector{{0.5, 1.5}});
    CHECK(o[2] == Vector{{1.5, 2.5}});
    for (const auto& v : three_roads_outcomes(Vector{{4.0, 4.0}})) CHECK(v == Vector{{4.0, 4.0}});
    const auto recs = gen_three_roads(10000, 3);
    std::array<double, 3> freq{};
    for (const auto& r : recs) {
      CHECK(r.input.cwiseAbs().maxCoeff() <= 50.0);
      const auto cases = three_roads_outcomes(r.input);
      for (int k = 0; k < 3; ++k) freq[k] += (cases[k] - r.output).norm() == 0.0;
    }
    for (double f : freq) CHECK(std::abs(f / 10000 - 1.0 / 3.0) < 0.02);
  }

  TEST_CASE("four node: outcomes, edges and frequencies") {
    const auto o = four_node_outcomes(0.0);
    CHECK(o[0] == Vector{{5.0, -5.0, 5.0, -5.0}});
    CHECK(o[1] == Vector{{-5.0, 5.0, -5.0, 5.0}});
    const auto recs = gen_four_node(10000, 4);
    double first = 0;
    for (const auto& r : recs) {
      for (const auto& [a, b] : four_node_edges()) CHECK(std::abs(std::abs(r.output[Eigen::Index(a)] - r.output[Eigen::Index(b)]) - 10.0) < 1e-12);
      first += (r.output - four_node_outcomes(r.input[0])[0]).norm() == 0.0;
    }
    CHECK(std::abs(first / 10000 - 0.5) < 0.02);
  }

  TEST_CASE("generators are reproducible per record") {
    const auto a = gen_three_roads(50, 9), b = gen_three_roads(10, 9);
    for (int i = 0; i < 10; ++i) CHECK(a[i].output == b[i].output);
  }
}

TEST_SUITE("beam") {
  TEST_CASE("rest state, geometry and energy symmetry") {
    const auto spec = BeamSpec::uniform(3, 1.0, 1.0, 1.0);
    Rng rng(1);
    const BeamState s0 = solve_beam_step(spec, 0.0, BeamState::rest(3), true, rng);
    CHECK(s0.q.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(s0.eps.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(beam_energy(spec, s0) < 1e-28);
    const Matrix p = beam_positions(spec, BeamState::rest(3));
    CHECK(p.row(0).norm() == 0.0);
    for (int k = 0; k <= 3; ++k) {
      CHECK(p(k, 0) == 0.0);
      CHECK(p(k, 1) == doctest::Approx(double(k)));
    }
    BeamState s;
    s.q = Vector{{0.3, -0.1, 0.5}};
    s.eps = Vector{{-0.01, 0.02, -0.03}};
    CHECK(beam_energy(spec, s) == beam_energy(spec, s.reflected()));
    const Matrix a = beam_positions(spec, s), b = beam_positions(spec, s.reflected());
    CHECK(a.col(0) == Matrix(-b.col(0)));
    CHECK(a.col(1) == b.col(1));
    CHECK_THROWS(solve_beam_step(spec, 3.5, BeamState::rest(3), false, rng));
  }

  TEST_CASE("uniform beam before buckling: q = 0 and eps = ln(1 - d/sum L)") {
    const auto spec = BeamSpec::uniform(4, 0.8, 1.3, 1.1);
    Rng rng(2);
    for (double d : {0.01, 0.05, 0.1}) {
      BeamStepInfo info;
      const BeamState s = solve_beam_step(spec, d, BeamState::rest(4), true, rng, {}, &info);
      CHECK_FALSE(info.perturbed);
      CHECK(s.q.cwiseAbs().maxCoeff() < 1e-12);
      for (double e : s.eps) CHECK(std::abs(e - std::log(1 - d / 3.2)) < 1e-8);
    }
  }

  TEST_CASE("straight branch of a non-uniform 3-segment beam matches the bisection oracle") {
    BeamSpec spec{3, {0.7, 1.4, 1.9}, {0.6, 1.8, 1.1}, {1.5, 0.9, 1.2}};
    Rng rng(3);
    for (double d : {0.02, 0.3, 1.5}) {
      const BeamState s = solve_beam_step(spec, d, BeamState::rest(3), false, rng);
      const auto eps = straight_beam_oracle(spec, d);
      CHECK(s.q.cwiseAbs().maxCoeff() < 1e-12);
      for (int i = 0; i < 3; ++i) CHECK(std::abs(s.eps[i] - eps[i]) < 1e-9);
    }
  }

  TEST_CASE("trajectories: constraint, KKT, geometry, reflection and energy continuity") {
    const auto trajs = gen_beam_dataset(20, 5);
    int left = 0, right = 0;
    for (const auto& tr : trajs) {
      const double total = tr.spec.total_length();
      REQUIRE(tr.states.size() == 200);
      CHECK(tr.d_schedule.front() == 0.0);
      CHECK(tr.d_schedule.back() == total);
      CHECK(std::is_sorted(tr.d_schedule.begin(), tr.d_schedule.end()));
      CHECK(tr.buckling_step > 0);
      (tr.direction > 0 ? right : left)++;
      for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const double d = tr.d_schedule[k];
        const auto& st = tr.states[k];
        CHECK(std::abs(beam_constraint(tr.spec, st, d)) < 1e-10);
        const Vector r = beam_kkt_residual(tr.spec, st, d);
        CHECK(r.head(2 * tr.spec.n).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(beam_kkt_residual(tr.spec, st.reflected(), d).cwiseAbs().maxCoeff() < 1e-8);
        const Matrix& p = tr.positions[k];
        CHECK(p.row(0).norm() == 0.0);
        CHECK(std::abs(p(tr.spec.n, 1) - (total - d)) < 1e-8);
        CHECK(beam_energy(tr.spec, st) == beam_energy(tr.spec, st.reflected()));
        if (k > 0 && static_cast<int>(k) != tr.buckling_step) {
          // dU/dd equals the multiplier along a smooth branch
          const double du = beam_energy(tr.spec, st) - beam_energy(tr.spec, tr.states[k - 1]);
          const double pred = 0.5 * (st.lambda + tr.states[k - 1].lambda) * (d - tr.d_schedule[k - 1]);
          CHECK(std::abs(du - pred) <= 0.05 * std::abs(du) + 1e-9);
        }
      }
      CHECK(std::abs(tr.positions.back()(tr.spec.n, 1)) < 1e-8);
    }
    CHECK(left > 0);
    CHECK(right > 0);
  }

  TEST_CASE("lowest mode of a buckled-through straight state is unstable") {
    const auto spec = BeamSpec::uniform(3, 1.0, 1.0, 0.5);
    Rng rng(6);
    const BeamState straight = solve_beam_step(spec, 1.5, BeamState::rest(3), false, rng);
    const auto [mu, mode] = beam_lowest_mode(spec, straight);
    CHECK(mu < 0);
    CHECK(std::abs(mode.norm() - 1.0) < 1e-12);
    BeamStepInfo info;
    const BeamState stable = solve_beam_step(spec, 1.5, straight, true, rng, {}, &info);
    CHECK(info.perturbed);
    CHECK(info.min_projected_eigenvalue > -1e-10);
    CHECK(beam_energy(spec, stable) < beam_energy(spec, straight));
  }

  TEST_CASE("sampled beam parameters follow their ranges") {
    Rng rng(7);
    std::array<int, 12> counts{};
    for (int i = 0; i < 2000; ++i) {
      const auto s = BeamSpec::sample(rng);
      REQUIRE((s.n >= 2 && s.n <= 11));
      counts[s.n]++;
      for (int k = 0; k < s.n; ++k) {
        CHECK((s.L[k] >= 0.5 && s.L[k] <= 2.0 && s.C[k] >= 0.5 && s.C[k] <= 2.0 && s.K[k] >= 0.5 && s.K[k] <= 2.0));
      }
    }
    for (int n = 2; n <= 11; ++n) CHECK(counts[n] > 120);
  }
}

TEST_SUITE("allen-cahn") {
  TEST_CASE("mu < 0 decays to zero") {
    ACConfig c;
    c.mu = -0.1;
    c.save_stride = 1000;
    Rng rng(1);
    const auto tr = solve_allen_cahn(c, rng);
    CHECK(tr.u.row(tr.u.rows() - 1).cwiseAbs().maxCoeff() < 1e-4);
  }

  TEST_CASE("mu = 1, eps = 0.1 settles homogeneously at +1 or -1") {
    ACConfig c;
    c.save_stride = 1000;
    int plus = 0;
    for (std::uint64_t s = 0; s < 16; ++s) {
      Rng rng(s);
      const Vector u = solve_allen_cahn(c, rng).u.row(1).transpose();
      const double sign = u.mean() > 0 ? 1.0 : -1.0;
      plus += sign > 0;
      CHECK((u.array() - sign).abs().maxCoeff() < 0.05);
    }
    CHECK(plus > 0);
    CHECK(plus < 16);
  }

  TEST_CASE("zero initial noise stays at zero") {
    ACConfig c;
    c.init_noise_sigma = 0.0;
    c.save_stride = 100;
    Rng rng(1);
    CHECK(solve_allen_cahn(c, rng).u.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("Lyapunov functional never increases and fields stay bounded") {
    Rng rng(2);
    for (int trial = 0; trial < 6; ++trial) {
      ACConfig c = ACConfig::sample(rng);
      Vector u0(c.nx);
      for (auto& v : u0) v = rng.normal(0, 1e-3);
      std::vector<double> energy;
      const auto tr = solve_allen_cahn_from(c, u0, &energy);
      CHECK(energy.size() == static_cast<std::size_t>(c.num_steps() + 1));
      for (std::size_t k = 1; k < energy.size(); ++k) CHECK(energy[k] <= energy[k - 1] + 1e-8);
      const double bound = std::max(1.0, std::sqrt(std::max(c.mu, 0.0))) + 0.1;
      CHECK(tr.u.cwiseAbs().maxCoeff() <= bound);
    }
  }

  TEST_CASE("the scheme commutes exactly with circular shifts") {
    Rng rng(3);
    ACConfig c;
    c.mu = 0.6;
    c.epsilon = 0.02;
    c.save_stride = 50;
    Vector u0(c.nx);
    for (auto& v : u0) v = rng.normal(0, 1e-3);
    const auto a = solve_allen_cahn_from(c, u0);
    for (int k : {1, 37, 199}) {
      Vector s(c.nx);
      for (int i = 0; i < c.nx; ++i) s[(i + k) % c.nx] = u0[i];
      const auto b = solve_allen_cahn_from(c, s);
      Matrix shifted(a.u.rows(), a.u.cols());
      for (int i = 0; i < c.nx; ++i) shifted.col((i + k) % c.nx) = a.u.col(i);
      CHECK((b.u - shifted).cwiseAbs().maxCoeff() == 0.0);
      CHECK(metrics::ac_residual(b) == metrics::ac_residual(a.config, shifted));
    }
  }

  TEST_CASE("solver output is scheme exact under the residual metric") {
    Rng rng(4);
    ACConfig c = ACConfig::sample(rng);
    c.t_end = 20;
    const auto tr = solve_allen_cahn(c, rng);
    CHECK(metrics::ac_residual(tr) < 1e-16 * c.nx);
  }

  TEST_CASE("sampled parameters follow their laws (KS at 1%)") {
    Rng rng(5);
    std::vector<double> le, mu;
    for (int i = 0; i < 2000; ++i) {
      const auto c = ACConfig::sample(rng);
      le.push_back(std::log10(c.epsilon));
      mu.push_back(c.mu);
    }
    const double crit = 1.63 / std::sqrt(2000.0);
    CHECK(ks_statistic(le, [](double x) { return std::clamp((x + 3) / 2, 0.0, 1.0); }) < crit);
    CHECK(ks_statistic(mu, [](double x) { return std::clamp((x + 0.1) / 1.1, 0.0, 1.0); }) < crit);
  }

  TEST_CASE("dataset trajectories share their saved shape") {
    const auto ds = gen_ac_dataset(3, 7, 100);
    for (const auto& t : ds) {
      CHECK(t.u.rows() == 11);
      CHECK(t.u.cols() == 200);
    }
  }

  TEST_CASE("configuration validation") {
    ACConfig c;
    c.nx = 2;
    CHECK_THROWS(c.validate());
    c = ACConfig{};
    c.dt = 0.0;
    CHECK_THROWS(c.validate());
    c = ACConfig{};
    c.save_stride = 7;
    CHECK_THROWS(c.validate());
  }
}
