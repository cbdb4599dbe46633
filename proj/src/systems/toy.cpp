#include "symflow/systems/toy.hpp"

namespace symflow::systems {

std::pair<double, double> gen_two_deltas(Rng& rng) {
  const double x = rng.normal();
  const double y = rng.coin() ? 1.0 : -1.0;
  return {x, y};
}

std::vector<ToyRecord> gen_coin_flip(std::size_t n_records, std::uint64_t seed) {
  std::vector<ToyRecord> out;
  out.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    Rng rng(seed, i);
    const double x = rng.uniform(-100.0, 100.0);
    const double y = rng.coin() ? x : -x;
    out.push_back({Vector::Constant(1, x), Vector::Constant(1, y), {sym::GroupDescriptor::Kind::sign_flip}});
  }
  return out;
}

std::vector<Vector> three_roads_outcomes(const Vector& input) {
  require_shape(input.size() == 2, "three roads: input must have two entries");
  const double x1 = input[0], x2 = input[1];
  const double h = 0.5 * (x2 - x1);
  return {Vector{{x1 - h, x2 + h}}, Vector{{x1 - h, x2 - h}}, Vector{{x1 + h, x2 + h}}};
}

std::vector<ToyRecord> gen_three_roads(std::size_t n_records, std::uint64_t seed) {
  std::vector<ToyRecord> out;
  out.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    Rng rng(seed, i);
    Vector x(2);
    x[0] = rng.uniform(-50.0, 50.0);
    x[1] = rng.uniform(-50.0, 50.0);
    const auto outcomes = three_roads_outcomes(x);
    const auto which = static_cast<std::size_t>(rng.uniform_int(0, 2));
    out.push_back({x, outcomes[which], {sym::GroupDescriptor::Kind::trivial}});
  }
  return out;
}

const std::vector<std::pair<std::size_t, std::size_t>>& four_node_edges() {
  static const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  return edges;
}

std::vector<Vector> four_node_outcomes(double x) {
  const double o = kFourNodeOffset;
  return {Vector{{x + o, x - o, x + o, x - o}}, Vector{{x - o, x + o, x - o, x + o}}};
}

std::vector<ToyRecord> gen_four_node(std::size_t n_records, std::uint64_t seed) {
  std::vector<ToyRecord> out;
  out.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    Rng rng(seed, i);
    const double x = rng.uniform(-50.0, 50.0);
    const auto outcomes = four_node_outcomes(x);
    out.push_back({Vector::Constant(kFourNodeCount, x), outcomes[rng.coin() ? 0 : 1],
                   {sym::GroupDescriptor::Kind::solution_swap}});
  }
  return out;
}

}  // namespace symflow::systems
