#pragma once

#include "symflow/rng.hpp"
#include "symflow/symmetry/group.hpp"
#include "symflow/types.hpp"

#include <cstdint>
#include <vector>

namespace symflow::systems {

struct ToyRecord {
  Vector input;
  Vector output;
  sym::GroupDescriptor matching_group;
};

/// x ~ N(0, 1); y = +-1 with equal probability, independent of x.
std::pair<double, double> gen_two_deltas(Rng& rng);

// Record i of every generator below is drawn from Rng(seed, i), so any record
// can be regenerated on its own.

/// Bet x ~ U[-100, 100]; winnings y in {x, -x}.
std::vector<ToyRecord> gen_coin_flip(std::size_t n_records, std::uint64_t seed);

/// Two entities at x ~ U[-50, 50]^2; with d = x2 - x1 the outcome is one of
/// [x1 - d/2, x2 + d/2], [x1 - d/2, x2 - d/2], [x1 + d/2, x2 + d/2].
std::vector<ToyRecord> gen_three_roads(std::size_t n_records, std::uint64_t seed);
std::vector<Vector> three_roads_outcomes(const Vector& input);

/// Square graph 0-1-2-3-0, every node carrying x ~ U[-50, 50]; outcome is
/// x + 5 * (+1, -1, +1, -1) or its mirror.
std::vector<ToyRecord> gen_four_node(std::size_t n_records, std::uint64_t seed);
std::vector<Vector> four_node_outcomes(double x);
inline constexpr std::size_t kFourNodeCount = 4;
inline constexpr double kFourNodeOffset = 5.0;
const std::vector<std::pair<std::size_t, std::size_t>>& four_node_edges();

}  // namespace symflow::systems
