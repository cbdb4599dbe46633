#pragma once

#include <cstdint>
#include <random>

namespace symflow {

/// Seeded random stream. Uniform and normal variates are produced by our own
/// transforms on top of mt19937_64 so draws are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  /// Independent stream for (seed, stream) pairs, e.g. (dataset seed, record index).
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// exp(uniform(log lo, log hi)).
  double log_uniform(double lo, double hi);
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool coin() { return (next_u64() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace symflow
