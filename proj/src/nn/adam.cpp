#include "symflow/nn/adam.hpp"

#include <cmath>
#include <string>

namespace symflow::nn {

AdamState AdamState::fresh(Eigen::Index n, double learning_rate) {
  AdamState s;
  s.m = Vector::Zero(n);
  s.v = Vector::Zero(n);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(ParamVector& params, const ParamVector& grads, AdamState& state) {
  require_shape(params.size() == grads.size(), "adam_step: params/grads length mismatch");
  require_shape(state.m.size() == params.size() && state.v.size() == params.size(),
                "adam_step: optimizer state length mismatch");
  for (Eigen::Index i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericalError("adam_step: non-finite gradient at index " + std::to_string(i));
    }
  }
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= state.learning_rate * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + state.eps);
}

}  // namespace symflow::nn
