#pragma once

#include "symflow/flow/velocity_model.hpp"
#include "symflow/symmetry/group.hpp"

#include <memory>
#include <vector>

namespace symflow::sym {

/// A group element together with how it acts on the conditioning input.
struct PairedAction {
  GroupAction on_state;
  GroupAction on_cond;
};

/// Group averaging v'(x, t, c) = 1/|G| sum_g g^-1 . v(g . x, t, g . c).
/// The result satisfies v'(g x, t, g c) = g v'(x, t, c) for every element.
class EquivariantModel final : public flow::VelocityModel {
 public:
  EquivariantModel(std::unique_ptr<flow::VelocityModel> base, std::vector<PairedAction> group);

  std::size_t dim() const override { return base_->dim(); }
  std::size_t cond_dim() const override { return base_->cond_dim(); }
  Matrix forward(const Matrix& x, const Vector& t, const Matrix& cond,
                 std::unique_ptr<flow::Tape>* tape = nullptr) const override;
  void backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const override;
  ParamVector& params() override { return base_->params(); }
  const ParamVector& params() const override { return base_->params(); }
  std::unique_ptr<flow::VelocityModel> clone() const override;
  nlohmann::json describe() const override;

  const flow::VelocityModel& base() const { return *base_; }

 private:
  std::unique_ptr<flow::VelocityModel> base_;
  std::vector<PairedAction> group_;
  std::vector<GroupAction> inverses_;
};

/// Wraps `model` so it is equivariant under `group` acting on states; the
/// conditioning input is left unchanged unless `cond_actions` are given
/// (one per group element, same order).
std::unique_ptr<flow::VelocityModel> equivariantize(std::unique_ptr<flow::VelocityModel> model,
                                                    const SymmetryGroup& group,
                                                    const std::vector<GroupAction>& cond_actions = {});

}  // namespace symflow::sym
