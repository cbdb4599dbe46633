#include "oracles.hpp"
#include "symflow/nn/adam.hpp"
#include "symflow/nn/checkpoint.hpp"
#include "symflow/nn/mlp.hpp"

#include <doctest.h>

#include <filesystem>

using namespace symflow;
using namespace symflow::nn;

namespace {

MlpSpec random_spec(Rng& rng) {
  static const Activation acts[] = {Activation::tanh, Activation::relu, Activation::silu};
  MlpSpec s;
  const int layers = static_cast<int>(rng.uniform_int(2, 4));
  for (int i = 0; i < layers; ++i) s.layer_sizes.push_back(static_cast<int>(rng.uniform_int(1, 6)));
  s.activation = acts[rng.uniform_int(0, 2)];
  return s;
}

Vector random_vector(Eigen::Index n, Rng& rng) {
  Vector v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_SUITE("neural-core") {
  TEST_CASE("zero parameters give a zero output") {
    const MlpSpec spec{{3, 5, 2}, Activation::tanh};
    const Vector out = mlp_apply(spec, ParamVector::Zero(static_cast<Eigen::Index>(spec.param_count())),
                                 Vector{{1.0, -2.0, 3.0}});
    CHECK(out.size() == 2);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("single linear layer is a dot product") {
    const MlpSpec spec{{2, 1}, Activation::relu};
    CHECK(spec.param_count() == 3);
    const Vector out = mlp_apply(spec, ParamVector{{1.0, 1.0, 0.0}}, Vector{{3.0, 4.0}});
    CHECK(out[0] == 7.0);
  }

  TEST_CASE("random networks match the per-element oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      const MlpSpec spec = random_spec(rng);
      const ParamVector p = random_vector(static_cast<Eigen::Index>(spec.param_count()), rng);
      const Vector x = random_vector(spec.input_size(), rng);
      const Vector got = mlp_apply(spec, p, x);
      const auto want = oracle::mlp(spec.layer_sizes, to_string(spec.activation), to_std(p), to_std(x));
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[static_cast<Eigen::Index>(i)] - want[i]) < 1e-12);
    }
  }

  TEST_CASE("shape errors") {
    const MlpSpec spec{{2, 3, 1}, Activation::silu};
    const ParamVector p = ParamVector::Zero(static_cast<Eigen::Index>(spec.param_count()));
    CHECK_THROWS_AS(mlp_apply(spec, p, Vector::Zero(3)), ShapeError);
    CHECK_THROWS_AS(mlp_apply(spec, ParamVector::Zero(2), Vector::Zero(2)), ShapeError);
    CHECK_THROWS_AS(mlp_gradient(spec, p, Vector::Zero(2), Vector::Zero(2)), ShapeError);
    CHECK_THROWS_AS((MlpSpec{{4}, Activation::tanh}.validate()), ShapeError);
    CHECK_THROWS_AS((MlpSpec{{4, 0, 1}, Activation::tanh}.validate()), ShapeError);
  }

  TEST_CASE("gradient special cases") {
    const MlpSpec spec{{2, 4, 3}, Activation::tanh};
    Rng rng(3);
    const ParamVector p = random_vector(static_cast<Eigen::Index>(spec.param_count()), rng);
    CHECK(mlp_gradient(spec, p, Vector{{0.3, -0.2}}, Vector::Zero(3)).cwiseAbs().maxCoeff() == 0.0);

    const MlpSpec lin{{2, 1}, Activation::tanh};
    const ParamVector g = mlp_gradient(lin, ParamVector{{0.5, -1.0, 2.0}}, Vector{{3.0, 4.0}}, Vector{{1.0}});
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 4.0);
    CHECK(g[2] == 1.0);
  }

  TEST_CASE("analytic gradients match central differences on 100 random triples") {
    Rng rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const MlpSpec spec = random_spec(rng);
      const ParamVector p = random_vector(static_cast<Eigen::Index>(spec.param_count()), rng);
      const Vector x = random_vector(spec.input_size(), rng);
      const Vector up = random_vector(spec.output_size(), rng);
      const Vector analytic = mlp_gradient(spec, p, x, up);
      const Vector fd = oracle::finite_difference([&](const Vector& q) { return up.dot(mlp_apply(spec, q, x)); }, p);
      worst = std::max(worst, oracle::relative_error(analytic, fd));
    }
    CHECK(worst < 1e-4);
  }

  TEST_CASE("a zero-bias linear layer is homogeneous in its weights") {
    const MlpSpec spec{{3, 2}, Activation::tanh};
    Rng rng(8);
    ParamVector p = random_vector(8, rng);
    p.tail(2).setZero();
    const Vector x = random_vector(3, rng);
    const Vector base = mlp_apply(spec, p, x);
    const Vector scaled = mlp_apply(spec, ParamVector(2.5 * p), x);
    CHECK((scaled - 2.5 * base).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("Glorot initialization range") {
    const MlpSpec spec{{10, 30, 5}, Activation::silu};
    Rng rng(1);
    const ParamVector p = init_glorot(spec, rng);
    const double a1 = std::sqrt(6.0 / 40.0);
    CHECK(p.head(300).cwiseAbs().maxCoeff() <= a1);
    CHECK(p.segment(300, 30).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("adam: zero gradient on a fresh state leaves params unchanged") {
    ParamVector p{{1.0, -2.0}};
    AdamState s = AdamState::fresh(2, 0.1);
    adam_step(p, ParamVector::Zero(2), s);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == -2.0);
    CHECK(s.step == 1);
  }

  TEST_CASE("adam: first step moves by the learning rate") {
    for (double g : {1e-3, 0.7, -42.0}) {
      ParamVector p{{0.5}};
      AdamState s = AdamState::fresh(1, 0.01);
      adam_step(p, ParamVector{{g}}, s);
      CHECK(std::abs(std::abs(p[0] - 0.5) - 0.01) < 1e-6);
      CHECK((p[0] - 0.5) * g < 0);
    }
  }

  TEST_CASE("adam: three constant-gradient steps follow the scalar recurrence") {
    const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.3;
    double x = 1.0, m = 0.0, v = 0.0;
    for (int k = 1; k <= 3; ++k) {
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      const double mh = m / (1 - std::pow(b1, k));
      const double vh = v / (1 - std::pow(b2, k));
      x -= lr * mh / (std::sqrt(vh) + eps);
    }
    ParamVector p{{1.0}};
    AdamState s = AdamState::fresh(1, lr);
    for (int k = 0; k < 3; ++k) adam_step(p, ParamVector{{g}}, s);
    CHECK(std::abs(p[0] - x) < 1e-12);
    CHECK(s.step == 3);
    CHECK(s.v[0] >= 0.0);
  }

  TEST_CASE("adam: zero learning rate is the identity") {
    Rng rng(2);
    ParamVector p = random_vector(5, rng);
    const ParamVector keep = p;
    AdamState s = AdamState::fresh(5, 0.0);
    for (int k = 0; k < 4; ++k) adam_step(p, random_vector(5, rng), s);
    CHECK(p == keep);
  }

  TEST_CASE("adam: a non-finite gradient aborts without touching state") {
    ParamVector p{{1.0, 2.0}};
    AdamState s = AdamState::fresh(2, 0.1);
    CHECK_THROWS_AS(adam_step(p, ParamVector{{0.1, std::nan("")}}, s), NumericalError);
    CHECK(s.step == 0);
    CHECK(p[0] == 1.0);
    CHECK_THROWS_AS(adam_step(p, ParamVector::Zero(3), s), ShapeError);
  }

  TEST_CASE("checkpoint round trip is bit exact") {
    Rng rng(4);
    MlpCheckpoint c;
    c.spec = {{3, 7, 2}, Activation::relu};
    c.params = random_vector(static_cast<Eigen::Index>(c.spec.param_count()), rng);
    c.params[0] = 0.1 + 0.2;
    c.params[1] = 1e-300;
    c.seed = 99;
    const auto path = std::filesystem::temp_directory_path() / "symflow_test_ckpt.json";
    save_checkpoint(path, c);
    const MlpCheckpoint back = load_checkpoint(path);
    CHECK(back.spec == c.spec);
    CHECK(back.seed == 99);
    CHECK(back.params == c.params);
    std::filesystem::remove(path);
  }
}
