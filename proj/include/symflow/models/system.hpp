#pragma once

#include "symflow/flow/velocity_model.hpp"
#include "symflow/models/common.hpp"
#include "symflow/priors.hpp"
#include "symflow/symmetry/group.hpp"
#include "symflow/systems/dataset.hpp"

#include <memory>
#include <vector>

namespace symflow::models {

/// How a system's records are posed as a flow problem. Learning coordinates
/// are z = (y - center) / scale, where center is the input for centered
/// systems and zero otherwise; the model is conditioned on conditions(input).
struct SystemSpec {
  systems::SystemId id = systems::SystemId::two_deltas;
  std::vector<std::size_t> target_shape;
  std::size_t dim = 0;
  std::size_t cond_dim = 0;
  double scale = 1.0;
  bool centered = false;
  prior::PriorSpec prior;  // in learning coordinates
  long mask_offset = -1;   // conditioning offset of the node mask (beam)
  sym::GroupDescriptor group;  // matching group in learning coordinates

  Matrix conditions(const Matrix& inputs) const;
  Matrix encode(const Matrix& targets, const Matrix& inputs) const;
  Matrix decode(const Matrix& z, const Matrix& inputs) const;
  std::unique_ptr<prior::Prior> make_prior() const;
};

/// `target_shape` defaults to the shape produced by build_dataset.
SystemSpec system_spec(systems::SystemId id, const std::vector<std::size_t>& target_shape = {});

/// Per-system defaults; `overrides` (may be null) replaces individual fields.
ArchConfig default_arch(systems::SystemId id, const nlohmann::json* overrides = nullptr);

/// Default architecture for the system with its equivariance wrapper:
/// two_deltas, coin_flip: MLP; three_roads: SetNet; four_node: GraphNet on the
/// square; beam: BeamNet averaged over {identity, reflection}; allen_cahn:
/// CircConvNet averaged over {u, -u}.
std::unique_ptr<flow::VelocityModel> build_model(const SystemSpec& spec, const ArchConfig& arch);

}  // namespace symflow::models
