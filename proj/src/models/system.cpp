#include "symflow/models/system.hpp"

#include "symflow/models/networks.hpp"
#include "symflow/symmetry/equivariantize.hpp"
#include "symflow/systems/allen_cahn.hpp"
#include "symflow/systems/beam.hpp"
#include "symflow/systems/toy.hpp"

#include <cmath>

namespace symflow::models {

using systems::SystemId;

namespace {

constexpr double kInputScale = 50.0;  // coin flip, three roads, four node inputs
constexpr double kFourNodeScale = 5.0;
constexpr double kBeamScale = 4.0;
constexpr double kRandomWalkStep = 0.05;

}  // namespace

SystemSpec system_spec(SystemId id, const std::vector<std::size_t>& shape_in) {
  SystemSpec s;
  s.id = id;
  s.prior.kind = prior::PriorSpec::Kind::gaussian;
  s.prior.sigma = 1.0;
  switch (id) {
    case SystemId::two_deltas:
      s.target_shape = {1};
      s.cond_dim = 1;
      s.group.kind = sym::GroupDescriptor::Kind::sign_flip;
      break;
    case SystemId::coin_flip:
      s.target_shape = {1};
      s.cond_dim = 1;
      s.scale = kInputScale;
      s.group.kind = sym::GroupDescriptor::Kind::sign_flip;
      break;
    case SystemId::three_roads:
      s.target_shape = {2};
      s.cond_dim = 2;
      s.scale = kInputScale;
      s.group.kind = sym::GroupDescriptor::Kind::trivial;
      break;
    case SystemId::four_node:
      s.target_shape = {systems::kFourNodeCount};
      s.cond_dim = systems::kFourNodeCount;
      s.scale = kFourNodeScale;
      s.centered = true;
      // Raw prior is input + N(0, 1); centered and scaled it is N(0, 1/scale^2).
      s.prior.sigma = 1.0 / kFourNodeScale;
      // Mirror solution 2x - y is a sign flip of y - x.
      s.group.kind = sym::GroupDescriptor::Kind::sign_flip;
      break;
    case SystemId::beam:
      s.target_shape = {systems::kBeamSteps, systems::kBeamMaxSegments};
      s.cond_dim = BeamNet::condition_size(systems::kBeamMaxSegments);
      s.scale = kBeamScale;
      s.mask_offset = static_cast<long>(BeamNet::mask_offset(systems::kBeamMaxSegments));
      s.group.kind = sym::GroupDescriptor::Kind::reflect_all;
      break;
    case SystemId::allen_cahn: {
      systems::ACConfig probe;
      probe.save_stride = systems::kACSaveStride;
      s.target_shape = {static_cast<std::size_t>(probe.num_saved()), static_cast<std::size_t>(probe.nx)};
      s.cond_dim = 2;
      break;
    }
  }
  if (!shape_in.empty()) {
    if (id == SystemId::beam) {
      require_shape(shape_in.size() == 2 && shape_in[1] == static_cast<std::size_t>(systems::kBeamMaxSegments),
                    "beam: target shape must be (steps, 11)");
    }
    if (id != SystemId::beam && id != SystemId::allen_cahn) {
      require_shape(shape_in == s.target_shape, "target shape does not match the system");
    }
    s.target_shape = shape_in;
  }
  s.dim = 1;
  for (auto d : s.target_shape) s.dim *= d;
  if (id == SystemId::beam || id == SystemId::allen_cahn) {
    s.prior.kind = prior::PriorSpec::Kind::random_walk;
    s.prior.sigma = kRandomWalkStep;
    s.prior.shape = s.target_shape;
    if (id == SystemId::allen_cahn) {
      s.group.kind = sym::GroupDescriptor::Kind::cyclic_shift;
      s.group.outer = s.target_shape[0];
      s.group.axis_len = s.target_shape[1];
      s.group.inner = 1;
    }
  } else {
    s.prior.shape = {s.dim};
  }
  return s;
}

Matrix SystemSpec::conditions(const Matrix& inputs) const {
  switch (id) {
    case SystemId::two_deltas:
      return inputs;
    case SystemId::coin_flip:
    case SystemId::three_roads:
    case SystemId::four_node:
      return inputs / kInputScale;
    case SystemId::beam: {
      const int n_max = systems::kBeamMaxSegments;
      require_shape(inputs.cols() == systems::kBeamInputSize, "beam: input width mismatch");
      Matrix c = Matrix::Zero(inputs.rows(), static_cast<Eigen::Index>(cond_dim));
      for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
        const int n = static_cast<int>(inputs(r, 0));
        c(r, 0) = static_cast<double>(n) / n_max;
        c(r, 1) = inputs.row(r).segment(1, n_max).sum() / 10.0;
        c.row(r).segment(2, 3 * n_max) = inputs.row(r).segment(1, 3 * n_max);
        for (int k = 0; k < n; ++k) c(r, 2 + 3 * n_max + k) = 1.0;
      }
      return c;
    }
    case SystemId::allen_cahn: {
      require_shape(inputs.cols() == 2, "allen_cahn: input must be (epsilon, mu)");
      Matrix c(inputs.rows(), 2);
      for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
        c(r, 0) = inputs(r, 1);
        c(r, 1) = std::log10(inputs(r, 0)) + 2.0;
      }
      return c;
    }
  }
  throw std::logic_error("unreachable");
}

Matrix SystemSpec::encode(const Matrix& targets, const Matrix& inputs) const {
  require_shape(static_cast<std::size_t>(targets.cols()) == dim, "encode: target width mismatch");
  if (centered) return (targets - inputs) / scale;
  return targets / scale;
}

Matrix SystemSpec::decode(const Matrix& z, const Matrix& inputs) const {
  require_shape(static_cast<std::size_t>(z.cols()) == dim, "decode: sample width mismatch");
  if (centered) return z * scale + inputs;
  return z * scale;
}

std::unique_ptr<prior::Prior> SystemSpec::make_prior() const { return prior::make_prior(prior, mask_offset); }

ArchConfig default_arch(SystemId id, const nlohmann::json* overrides) {
  ArchConfig a;
  switch (id) {
    case SystemId::two_deltas:
      a.hidden = 64;
      a.depth = 3;
      break;
    case SystemId::coin_flip:
      a.hidden = 32;
      a.depth = 2;
      break;
    case SystemId::three_roads:
    case SystemId::four_node:
      a.hidden = 64;
      a.depth = 2;
      break;
    case SystemId::beam:
      a.hidden = 64;
      a.depth = 1;
      break;
    case SystemId::allen_cahn:
      a.channels = 32;
      a.conv_layers = 4;
      a.kernel = 9;
      break;
  }
  if (overrides) {
    nlohmann::json merged = a.to_json();
    if (!overrides->is_object()) throw ConfigError("architecture block must be an object");
    for (const auto& [key, value] : overrides->items()) {
      if (!merged.contains(key)) throw ConfigError("architecture: unknown key '" + key + "'");
      merged[key] = value;
    }
    a = ArchConfig::from_json(merged);
  }
  a.validate();
  return a;
}

std::unique_ptr<flow::VelocityModel> build_model(const SystemSpec& spec, const ArchConfig& arch) {
  switch (spec.id) {
    case SystemId::two_deltas:
    case SystemId::coin_flip:
      return std::make_unique<MlpVelocity>(spec.dim, spec.cond_dim, arch);
    case SystemId::three_roads:
      return std::make_unique<SetNet>(2, 1, 1, arch);
    case SystemId::four_node:
      return std::make_unique<GraphNet>(systems::kFourNodeCount, systems::four_node_edges(), 1, 1, arch);
    case SystemId::beam: {
      auto base = std::make_unique<BeamNet>(spec.target_shape[1], spec.target_shape[0], arch);
      return sym::equivariantize(std::move(base), sym::SymmetryGroup::sign_flips(spec.dim));
    }
    case SystemId::allen_cahn: {
      auto base = std::make_unique<CircConvNet>(spec.target_shape[0], spec.target_shape[1], spec.cond_dim, arch);
      return sym::equivariantize(std::move(base), sym::SymmetryGroup::sign_flips(spec.dim));
    }
  }
  throw ConfigError("unknown system");
}

}  // namespace symflow::models
