#pragma once

#include "symflow/types.hpp"

#include <cstdint>

namespace symflow::nn {

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState fresh(Eigen::Index n, double learning_rate);
};

/// One bias-corrected Adam update, in place. Throws NumericalError on a
/// non-finite gradient before touching params or state.
void adam_step(ParamVector& params, const ParamVector& grads, AdamState& state);

}  // namespace symflow::nn
