#include "symflow/flow/velocity_model.hpp"

namespace symflow::flow {

Vector VelocityModel::velocity(const Vector& x, double t, const Vector& cond) const {
  Matrix xm = x.transpose();
  Matrix cm = cond.transpose();
  Vector tv = Vector::Constant(1, t);
  Matrix out = forward(xm, tv, cm);
  return out.row(0).transpose();
}

void VelocityModel::check_inputs(const Matrix& x, const Vector& t, const Matrix& cond) const {
  require_shape(static_cast<std::size_t>(x.cols()) == dim(),
                "velocity model: state width " + std::to_string(x.cols()) + " != " + std::to_string(dim()));
  require_shape(t.size() == x.rows(), "velocity model: one time per row required");
  require_shape(static_cast<std::size_t>(cond.cols()) == cond_dim() && cond.rows() == x.rows(),
                "velocity model: condition shape mismatch");
}

}  // namespace symflow::flow
