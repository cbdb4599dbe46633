#pragma once

#include "symflow/rng.hpp"
#include "symflow/types.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <memory>
#include <vector>

namespace symflow::prior {

Vector sample_gaussian(std::size_t size, double sigma, Rng& rng);
Vector sample_conditional(const Vector& x_input, double sigma, Rng& rng);
/// Time-major (T x spatial) grid; every spatial location is an independent
/// cumulative sum of N(0, step_sigma^2) increments along time.
Matrix sample_random_walk(std::size_t steps, std::size_t spatial, double step_sigma, Rng& rng);

/// Base distribution of a flow, possibly depending on the conditioning input.
class Prior {
 public:
  virtual ~Prior() = default;
  virtual std::size_t dim() const = 0;
  virtual Vector sample(const Vector& cond, Rng& rng) const = 0;
  virtual nlohmann::json describe() const = 0;
};

struct PriorSpec {
  enum class Kind { gaussian, conditional_gaussian, random_walk };
  Kind kind = Kind::gaussian;
  double sigma = 1.0;
  // gaussian / conditional_gaussian: {dim}; random_walk: {steps, spatial}
  std::vector<std::size_t> shape;

  void validate() const;
  nlohmann::json to_json() const;
  static PriorSpec from_json(const nlohmann::json& j);
};

class GaussianPrior final : public Prior {
 public:
  GaussianPrior(std::size_t dim, double sigma) : dim_(dim), sigma_(sigma) {}
  std::size_t dim() const override { return dim_; }
  Vector sample(const Vector& cond, Rng& rng) const override;
  nlohmann::json describe() const override;

 private:
  std::size_t dim_;
  double sigma_;
};

/// x_input + N(0, sigma^2); the conditioning vector is the input.
class ConditionalGaussianPrior final : public Prior {
 public:
  ConditionalGaussianPrior(std::size_t dim, double sigma) : dim_(dim), sigma_(sigma) {}
  std::size_t dim() const override { return dim_; }
  Vector sample(const Vector& cond, Rng& rng) const override;
  nlohmann::json describe() const override;

 private:
  std::size_t dim_;
  double sigma_;
};

/// Random walk along time, flattened time-major. If `mask_offset` is set, the
/// spatial entries whose conditioning value cond[mask_offset + s] is zero are
/// held at zero (padding of variable-size beams).
class RandomWalkPrior final : public Prior {
 public:
  RandomWalkPrior(std::size_t steps, std::size_t spatial, double step_sigma, long mask_offset = -1)
      : steps_(steps), spatial_(spatial), step_sigma_(step_sigma), mask_offset_(mask_offset) {}
  std::size_t dim() const override { return steps_ * spatial_; }
  Vector sample(const Vector& cond, Rng& rng) const override;
  nlohmann::json describe() const override;

 private:
  std::size_t steps_, spatial_;
  double step_sigma_;
  long mask_offset_;
};

std::unique_ptr<Prior> make_prior(const PriorSpec& spec, long mask_offset = -1);

}  // namespace symflow::prior
