#pragma once

#include "symflow/rng.hpp"
#include "symflow/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace symflow::nn {

enum class Activation { tanh, relu, silu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

void activate(Activation a, const Matrix& z, Matrix& out);
/// Multiplies `grad` in place by the activation derivative at `z`.
void activation_backward(Activation a, const Matrix& z, Matrix& grad);

/// Layer widths (input, hidden..., output). Hidden layers use `activation`,
/// the output layer is linear.
struct MlpSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::silu;

  void validate() const;
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  /// Parameter count. Layout per layer: weight matrix (out x in, row-major),
  /// then bias (out).
  std::size_t param_count() const;

  bool operator==(const MlpSpec&) const = default;
};

/// Intermediate values kept by a batched forward pass for the backward pass.
struct MlpTape {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation of each hidden layer
};

/// Batched forward pass; rows of `input` are samples.
Matrix mlp_forward(const MlpSpec& spec, std::span<const double> params, const Matrix& input,
                   MlpTape* tape = nullptr);

/// Backpropagates `upstream` (d loss / d output, same shape as the output).
/// Parameter gradients are *accumulated* into `grad`; returns d loss / d input.
Matrix mlp_backward(const MlpSpec& spec, std::span<const double> params, const MlpTape& tape,
                    const Matrix& upstream, std::span<double> grad);

Vector mlp_apply(const MlpSpec& spec, const ParamVector& params, const Vector& input);

/// Gradient of upstream . mlp_apply(spec, params, input) with respect to params.
ParamVector mlp_gradient(const MlpSpec& spec, const ParamVector& params, const Vector& input,
                         const Vector& upstream);

/// Glorot-uniform weights, zero biases.
void init_glorot(const MlpSpec& spec, std::span<double> params, Rng& rng);
ParamVector init_glorot(const MlpSpec& spec, Rng& rng);

}  // namespace symflow::nn
