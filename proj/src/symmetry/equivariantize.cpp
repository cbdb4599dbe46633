#include "symflow/symmetry/equivariantize.hpp"

namespace symflow::sym {

namespace {

struct EquivariantTape final : flow::Tape {
  std::vector<std::unique_ptr<flow::Tape>> per_element;
};

}  // namespace

EquivariantModel::EquivariantModel(std::unique_ptr<flow::VelocityModel> base,
                                   std::vector<PairedAction> group)
    : base_(std::move(base)), group_(std::move(group)) {
  if (!base_) throw std::invalid_argument("equivariantize: null model");
  if (group_.empty()) throw std::invalid_argument("equivariantize: empty group");
  for (const auto& g : group_) {
    require_shape(g.on_state.dim() == base_->dim(), "equivariantize: state action dimension mismatch");
    require_shape(g.on_cond.dim() == base_->cond_dim(), "equivariantize: condition action dimension mismatch");
    inverses_.push_back(g.on_state.inverse());
  }
}

Matrix EquivariantModel::forward(const Matrix& x, const Vector& t, const Matrix& cond,
                                 std::unique_ptr<flow::Tape>* tape) const {
  check_inputs(x, t, cond);
  auto record = tape ? std::make_unique<EquivariantTape>() : nullptr;
  Matrix sum = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t g = 0; g < group_.size(); ++g) {
    const Matrix gx = group_[g].on_state.apply_rows(x);
    const Matrix gc = group_[g].on_cond.apply_rows(cond);
    std::unique_ptr<flow::Tape> inner;
    const Matrix v = base_->forward(gx, t, gc, record ? &inner : nullptr);
    sum += inverses_[g].apply_rows(v, /*linear_only=*/true);
    if (record) record->per_element.push_back(std::move(inner));
  }
  if (tape) *tape = std::move(record);
  return sum / static_cast<double>(group_.size());
}

void EquivariantModel::backward(const flow::Tape& tape, const Matrix& upstream,
                                std::span<double> grad) const {
  const auto& t = dynamic_cast<const EquivariantTape&>(tape);
  const double w = 1.0 / static_cast<double>(group_.size());
  // The linear part of each action is a signed permutation, so the adjoint of
  // g^-1 is g itself.
  for (std::size_t g = 0; g < group_.size(); ++g) {
    const Matrix up = group_[g].on_state.apply_rows(upstream, /*linear_only=*/true) * w;
    base_->backward(*t.per_element[g], up, grad);
  }
}

std::unique_ptr<flow::VelocityModel> EquivariantModel::clone() const {
  return std::make_unique<EquivariantModel>(base_->clone(), group_);
}

nlohmann::json EquivariantModel::describe() const {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& g : group_) labels.push_back(g.on_state.label());
  return {{"type", "equivariant"}, {"group", labels}, {"base", base_->describe()}};
}

std::unique_ptr<flow::VelocityModel> equivariantize(std::unique_ptr<flow::VelocityModel> model,
                                                    const SymmetryGroup& group,
                                                    const std::vector<GroupAction>& cond_actions) {
  if (!model) throw std::invalid_argument("equivariantize: null model");
  if (!cond_actions.empty() && cond_actions.size() != group.size()) {
    throw std::invalid_argument("equivariantize: need one condition action per group element");
  }
  std::vector<PairedAction> paired;
  for (std::size_t g = 0; g < group.size(); ++g) {
    paired.push_back({group[g], cond_actions.empty() ? GroupAction::identity(model->cond_dim())
                                                     : cond_actions[g]});
  }
  return std::make_unique<EquivariantModel>(std::move(model), std::move(paired));
}

}  // namespace symflow::sym
