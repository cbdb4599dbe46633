#include "symflow/priors.hpp"

#include <stdexcept>

namespace symflow::prior {

namespace {

void check_sigma(double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("prior sigma must be >= 0");
}

}  // namespace

Vector sample_gaussian(std::size_t size, double sigma, Rng& rng) {
  check_sigma(sigma);
  Vector v(static_cast<Eigen::Index>(size));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sigma * rng.normal();
  return v;
}

Vector sample_conditional(const Vector& x_input, double sigma, Rng& rng) {
  return x_input + sample_gaussian(static_cast<std::size_t>(x_input.size()), sigma, rng);
}

Matrix sample_random_walk(std::size_t steps, std::size_t spatial, double step_sigma, Rng& rng) {
  check_sigma(step_sigma);
  Matrix grid(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(spatial));
  for (Eigen::Index t = 0; t < grid.rows(); ++t) {
    for (Eigen::Index s = 0; s < grid.cols(); ++s) {
      const double xi = step_sigma * rng.normal();
      grid(t, s) = (t == 0 ? 0.0 : grid(t - 1, s)) + xi;
    }
  }
  return grid;
}

void PriorSpec::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("prior sigma must be > 0");
  if (shape.empty()) throw ConfigError("prior shape must not be empty");
  if (kind == Kind::random_walk && shape.size() != 2) {
    throw ConfigError("random_walk prior shape must be {steps, spatial}");
  }
  for (auto s : shape) {
    if (s == 0) throw ConfigError("prior shape entries must be positive");
  }
}

nlohmann::json PriorSpec::to_json() const {
  const char* name = kind == Kind::gaussian               ? "gaussian"
                     : kind == Kind::conditional_gaussian ? "conditional_gaussian"
                                                          : "random_walk";
  return {{"kind", name}, {"sigma", sigma}, {"shape", shape}};
}

PriorSpec PriorSpec::from_json(const nlohmann::json& j) {
  PriorSpec spec;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") {
    spec.kind = Kind::gaussian;
  } else if (kind == "conditional_gaussian") {
    spec.kind = Kind::conditional_gaussian;
  } else if (kind == "random_walk") {
    spec.kind = Kind::random_walk;
  } else {
    throw ConfigError("unknown prior kind '" + kind + "'");
  }
  spec.sigma = j.at("sigma").get<double>();
  spec.shape = j.at("shape").get<std::vector<std::size_t>>();
  spec.validate();
  return spec;
}

Vector GaussianPrior::sample(const Vector&, Rng& rng) const {
  return sample_gaussian(dim_, sigma_, rng);
}

nlohmann::json GaussianPrior::describe() const {
  return PriorSpec{PriorSpec::Kind::gaussian, sigma_, {dim_}}.to_json();
}

Vector ConditionalGaussianPrior::sample(const Vector& cond, Rng& rng) const {
  require_shape(static_cast<std::size_t>(cond.size()) == dim_,
                "conditional prior: condition length must equal the sample dimension");
  return sample_conditional(cond, sigma_, rng);
}

nlohmann::json ConditionalGaussianPrior::describe() const {
  return PriorSpec{PriorSpec::Kind::conditional_gaussian, sigma_, {dim_}}.to_json();
}

Vector RandomWalkPrior::sample(const Vector& cond, Rng& rng) const {
  Matrix grid = sample_random_walk(steps_, spatial_, step_sigma_, rng);
  if (mask_offset_ >= 0) {
    require_shape(cond.size() >= mask_offset_ + static_cast<long>(spatial_),
                  "random walk prior: condition too short for mask");
    for (std::size_t s = 0; s < spatial_; ++s) {
      if (cond[mask_offset_ + static_cast<long>(s)] == 0.0) grid.col(static_cast<Eigen::Index>(s)).setZero();
    }
  }
  return Eigen::Map<const Vector>(grid.data(), grid.size());
}

nlohmann::json RandomWalkPrior::describe() const {
  auto j = PriorSpec{PriorSpec::Kind::random_walk, step_sigma_, {steps_, spatial_}}.to_json();
  if (mask_offset_ >= 0) j["mask_offset"] = mask_offset_;
  return j;
}

std::unique_ptr<Prior> make_prior(const PriorSpec& spec, long mask_offset) {
  spec.validate();
  switch (spec.kind) {
    case PriorSpec::Kind::gaussian:
      return std::make_unique<GaussianPrior>(spec.shape.front(), spec.sigma);
    case PriorSpec::Kind::conditional_gaussian:
      return std::make_unique<ConditionalGaussianPrior>(spec.shape.front(), spec.sigma);
    case PriorSpec::Kind::random_walk:
      return std::make_unique<RandomWalkPrior>(spec.shape[0], spec.shape[1], spec.sigma, mask_offset);
  }
  throw std::logic_error("unreachable");
}

}  // namespace symflow::prior
