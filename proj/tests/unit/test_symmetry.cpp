#include "oracles.hpp"
#include "symflow/flow/flow.hpp"
#include "symflow/models/networks.hpp"
#include "symflow/priors.hpp"
#include "symflow/symmetry/equivariantize.hpp"
#include "symflow/symmetry/fft.hpp"
#include "symflow/symmetry/matching.hpp"

#include <doctest.h>

using namespace symflow;
using namespace symflow::sym;

namespace {

Vector randn(Eigen::Index n, Rng& rng) {
  Vector v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<GroupAction> sample_actions(Rng& rng) {
  std::vector<GroupAction> out{GroupAction::identity(6), GroupAction::sign_flip(6), GroupAction::reflect(6, {1, 4}),
                               GroupAction::permute({2, 0, 1}, 2), GroupAction::circular_shift(2, 3, 1, 1),
                               GroupAction::reflect_about(randn(6, rng))};
  out.push_back(out[3].compose(out[2]));
  return out;
}

}  // namespace

TEST_SUITE("symmetry") {
  TEST_CASE("basic actions") {
    CHECK(GroupAction::identity(2).apply(Vector{{1.0, -2.0}}) == Vector{{1.0, -2.0}});
    CHECK(GroupAction::sign_flip(2).apply(Vector{{1.0, -2.0}}) == Vector{{-1.0, 2.0}});
    CHECK(GroupAction::circular_shift(4, 2).apply(Vector{{1.0, 2.0, 3.0, 4.0}}) == Vector{{3.0, 4.0, 1.0, 2.0}});
    CHECK(GroupAction::reflect(3, {0, 2}).apply(Vector{{1.0, 2.0, 3.0}}) == Vector{{-1.0, 2.0, -3.0}});
    CHECK(GroupAction::permute({1, 2, 0}).apply(Vector{{1.0, 2.0, 3.0}}) == Vector{{3.0, 1.0, 2.0}});
    CHECK_THROWS_AS(GroupAction::sign_flip(2).apply(Vector::Zero(3)), ShapeError);
    CHECK_THROWS(GroupAction::permute({0, 0, 1}));
  }

  TEST_CASE("inverse round trip and isometry for every kind") {
    Rng rng(1);
    for (const auto& a : sample_actions(rng)) {
      for (int i = 0; i < 20; ++i) {
        const Vector x = randn(6, rng), y = randn(6, rng);
        CHECK((a.inverse().apply(a.apply(x)) - x).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(a.compose(a.inverse()).is_identity());
        CHECK(std::abs((a.apply(x) - a.apply(y)).norm() - (x - y).norm()) < 1e-12);
        if (!a.has_offset()) CHECK(std::abs(a.apply(x).norm() - x.norm()) < 1e-12);
      }
    }
  }

  TEST_CASE("groups validate identity-first and closure") {
    CHECK_NOTHROW(SymmetryGroup::sign_flips(3));
    CHECK_THROWS(SymmetryGroup({GroupAction::sign_flip(2), GroupAction::identity(2)}));
    CHECK_THROWS(SymmetryGroup({GroupAction::identity(3), GroupAction::permute({1, 2, 0})}));
    CHECK(SymmetryGroup::cyclic_shifts(1, 8, 1).size() == 8);
  }

  TEST_CASE("coin-flip matching example") {
    const auto r = symmetric_match(Vector{{0.2}}, Vector{{-5.0}}, SymmetryGroup::sign_flips(1));
    CHECK(r.target[0] == 5.0);
    CHECK(r.element == 1);
    CHECK(r.cost == doctest::Approx(23.04));
    const Vector x{{0.4, -0.1}};
    CHECK(symmetric_match(x, x, SymmetryGroup::sign_flips(2)).element == 0);
    CHECK(symmetric_match(Vector{{0.0}}, Vector{{1.0}}, SymmetryGroup::sign_flips(1)).element == 0);
  }

  TEST_CASE("cyclic matching equals exhaustive enumeration") {
    Rng rng(2);
    const auto group = SymmetryGroup::cyclic_shifts(1, 8, 1);
    for (int trial = 0; trial < 200; ++trial) {
      const Vector x0 = randn(8, rng), x1 = randn(8, rng);
      std::size_t best = 0;
      double best_c = 1e300;
      for (std::size_t k = 0; k < 8; ++k) {
        const double c = (x0 - GroupAction::circular_shift(8, static_cast<long>(k)).apply(x1)).squaredNorm();
        if (c < best_c) {
          best_c = c;
          best = k;
        }
      }
      const auto r = symmetric_match(x0, x1, group);
      CHECK(r.element == best);
      CHECK(r.cost == doctest::Approx(best_c));
    }
  }

  TEST_CASE("match cost is group invariant and never exceeds the unmatched cost") {
    Rng rng(3);
    const auto group = SymmetryGroup::reflections(6, {0, 2, 4});
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x0 = randn(6, rng), x1 = randn(6, rng);
      const auto r = symmetric_match(x0, x1, group);
      CHECK(r.cost <= (x0 - x1).squaredNorm());
      for (const auto& g : group.elements()) {
        CHECK(std::abs(symmetric_match(g.apply(x0), g.apply(x1), group).cost - r.cost) < 1e-12);
      }
    }
  }

  TEST_CASE("fft agrees with a naive DFT for assorted lengths") {
    Rng rng(4);
    for (std::size_t n : {1u, 2u, 3u, 7u, 12u, 97u, 200u, 211u}) {
      std::vector<Complex> x(n);
      for (auto& v : x) v = {rng.normal(), rng.normal()};
      const auto f = fft(x);
      const auto back = fft(f, true);
      for (std::size_t k = 0; k < n; ++k) {
        Complex s = 0;
        for (std::size_t j = 0; j < n; ++j) s += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(j * k % n) / double(n));
        CHECK(std::abs(s - f[k]) < 1e-9 * double(n));
        CHECK(std::abs(back[k] - x[k]) < 1e-12 * double(n));
      }
    }
  }

  TEST_CASE("fft shift examples") {
    const std::vector<double> x1{1, 0, 0, 0}, x0{0, 0, 1, 0};
    CHECK(best_circular_shift_fft(x0, x1) == 2);
    const std::vector<double> x{0.3, -1.0, 2.0, 0.5, 0.1};
    CHECK(best_circular_shift_fft(x, x) == 0);
    CHECK_THROWS(best_circular_shift_fft(std::vector<double>{}, std::vector<double>{}));
  }

  TEST_CASE("fft shift equals the O(n^2) brute force on 500 random pairs") {
    Rng rng(5);
    int agree = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const Vector a = randn(200, rng), b = randn(200, rng);
      agree += best_circular_shift_fft(to_std(a), to_std(b)) == oracle::brute_shift(to_std(a), to_std(b));
    }
    CHECK(agree == 500);
  }

  TEST_CASE("space-time shift matching agrees with brute force over the shared shift") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
      const Vector a = randn(3 * 20, rng), b = randn(3 * 20, rng);
      std::size_t best = 0;
      double best_c = 1e300;
      for (std::size_t k = 0; k < 20; ++k) {
        const double c = (a - GroupAction::circular_shift(3, 20, 1, static_cast<long>(k)).apply(b)).squaredNorm();
        if (c < best_c - 1e-12) {
          best_c = c;
          best = k;
        }
      }
      CHECK(best_circular_shift_fft(to_std(a), to_std(b), 3, 20, 1) == best);
      GroupDescriptor d;
      d.kind = GroupDescriptor::Kind::cyclic_shift;
      d.outer = 3;
      d.axis_len = 20;
      const Vector m = SymmetricMatcher(d).match(a, b, Vector());
      CHECK((m - GroupAction::circular_shift(3, 20, 1, static_cast<long>(best)).apply(b)).norm() == 0.0);
    }
  }

  TEST_CASE("beam-style reflection matching picks the closer mirror") {
    Rng rng(7);
    GroupDescriptor d;
    d.kind = GroupDescriptor::Kind::reflect_all;
    for (int trial = 0; trial < 50; ++trial) {
      const Vector x0 = randn(30, rng), x1 = randn(30, rng);
      const Vector m = SymmetricMatcher(d).match(x0, x1, Vector());
      const bool reflect = (x0 + x1).squaredNorm() < (x0 - x1).squaredNorm();
      CHECK(m == (reflect ? Vector(-x1) : x1));
    }
  }

  TEST_CASE("solution swap maps a four-node solution to its mirror") {
    const Vector c = Vector::Constant(4, 3.0);
    const auto g = SymmetryGroup::solution_swap(c);
    CHECK(g.size() == 2);
    CHECK(g[1].apply(Vector{{8.0, -2.0, 8.0, -2.0}}) == Vector{{-2.0, 8.0, -2.0, 8.0}});
  }

  TEST_CASE("equivariantize: constant, already-equivariant, random and idempotent") {
    oracle::LambdaModel cst(2, 0, [](const Vector&, double, const Vector&) { return Vector{{1.5, -0.5}}; });
    auto avg = equivariantize(cst.clone(), SymmetryGroup::sign_flips(2));
    CHECK(avg->velocity(Vector{{0.3, 0.7}}, 0.2, Vector()).cwiseAbs().maxCoeff() == 0.0);

    oracle::LambdaModel odd(2, 0, [](const Vector& x, double t, const Vector&) { return Vector(x.array().pow(3) * t); });
    auto odd_avg = equivariantize(odd.clone(), SymmetryGroup::sign_flips(2));
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
      const Vector x = randn(2, rng);
      CHECK((odd_avg->velocity(x, 0.4, Vector()) - odd.velocity(x, 0.4, Vector())).cwiseAbs().maxCoeff() < 1e-15);
    }

    models::ArchConfig arch;
    arch.hidden = 16;
    auto eq = equivariantize(std::make_unique<models::MlpVelocity>(3, 0, arch), SymmetryGroup::sign_flips(3));
    auto twice = equivariantize(eq->clone(), SymmetryGroup::sign_flips(3));
    double worst = 0.0, drift = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vector x = randn(3, rng);
      const double t = rng.uniform();
      worst = std::max(worst, (eq->velocity(Vector(-x), t, Vector()) + eq->velocity(x, t, Vector())).cwiseAbs().maxCoeff());
      drift = std::max(drift, (twice->velocity(x, t, Vector()) - eq->velocity(x, t, Vector())).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);
    CHECK(drift < 1e-12);
  }

  TEST_CASE("equivariantized model gradients match finite differences") {
    models::ArchConfig arch;
    arch.hidden = 8;
    auto eq = equivariantize(std::make_unique<models::MlpVelocity>(2, 1, arch), SymmetryGroup::sign_flips(2));
    Rng rng(10);
    const Matrix x = Matrix::Random(3, 2), c = Matrix::Random(3, 1), up = Matrix::Random(3, 2);
    const Vector t{{0.1, 0.5, 0.9}};
    std::unique_ptr<flow::Tape> tape;
    eq->forward(x, t, c, &tape);
    Vector g = Vector::Zero(eq->params().size());
    eq->backward(*tape, up, flow::as_span(g));
    const ParamVector keep = eq->params();
    const Vector fd = oracle::finite_difference(
        [&](const Vector& p) {
          eq->params() = p;
          return (eq->forward(x, t, c).array() * up.array()).sum();
        },
        keep);
    eq->params() = keep;
    CHECK(oracle::relative_error(g, fd) < 1e-4);
  }
}
