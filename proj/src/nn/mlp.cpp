#include "symflow/nn/mlp.hpp"

#include <cmath>

namespace symflow::nn {

namespace {

using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;

}  // namespace

void activate(Activation a, const Matrix& z, Matrix& out) {
  switch (a) {
    case Activation::tanh:
      out = z.array().tanh();
      break;
    case Activation::relu:
      out = z.array().max(0.0);
      break;
    case Activation::silu:
      out = z.array() / (1.0 + (-z.array()).exp());
      break;
  }
}

void activation_backward(Activation a, const Matrix& z, Matrix& grad) {
  switch (a) {
    case Activation::tanh:
      grad.array() *= 1.0 - z.array().tanh().square();
      break;
    case Activation::relu:
      grad.array() *= (z.array() > 0.0).cast<double>();
      break;
    case Activation::silu: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      grad.array() *= s * (1.0 + z.array() * (1.0 - s));
      break;
    }
  }
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
    case Activation::silu:
      return "silu";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "silu") return Activation::silu;
  throw ConfigError("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw ShapeError("MlpSpec needs at least input and output widths");
  for (int w : layer_sizes) {
    if (w < 1) throw ShapeError("MlpSpec layer widths must be >= 1");
  }
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
  }
  return n;
}

Matrix mlp_forward(const MlpSpec& spec, std::span<const double> params, const Matrix& input,
                   MlpTape* tape) {
  require_shape(params.size() == spec.param_count(), "mlp: parameter count mismatch");
  require_shape(input.cols() == spec.input_size(),
                "mlp: input width " + std::to_string(input.cols()) + " != " +
                    std::to_string(spec.input_size()));
  if (tape) {
    tape->inputs.resize(spec.num_layers());
    tape->pre.resize(spec.num_layers() - 1);
  }
  Matrix h = input;
  std::size_t offset = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    ConstMatMap w(params.data() + offset, out, in);
    offset += static_cast<std::size_t>(out) * in;
    ConstVecMap b(params.data() + offset, out);
    offset += out;

    Matrix z = h * w.transpose();
    z.rowwise() += b;
    if (tape) tape->inputs[l] = std::move(h);
    if (l + 1 < spec.num_layers()) {
      activate(spec.activation, z, h);
      if (tape) tape->pre[l] = std::move(z);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Matrix mlp_backward(const MlpSpec& spec, std::span<const double> params, const MlpTape& tape,
                    const Matrix& upstream, std::span<double> grad) {
  require_shape(grad.size() == spec.param_count(), "mlp: gradient buffer size mismatch");
  require_shape(static_cast<int>(tape.inputs.size()) == spec.num_layers(), "mlp: empty tape");
  require_shape(upstream.cols() == spec.output_size() && upstream.rows() == tape.inputs[0].rows(),
                "mlp: upstream shape mismatch");

  // Offsets of each layer's block, walked backwards.
  std::vector<std::size_t> offsets(spec.num_layers());
  std::size_t offset = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    offsets[l] = offset;
    offset += static_cast<std::size_t>(spec.layer_sizes[l + 1]) * (spec.layer_sizes[l] + 1);
  }

  Matrix delta = upstream;
  for (int l = spec.num_layers() - 1; l >= 0; --l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    if (l + 1 < spec.num_layers()) activation_backward(spec.activation, tape.pre[l], delta);
    ConstMatMap w(params.data() + offsets[l], out, in);
    MatMap gw(grad.data() + offsets[l], out, in);
    VecMap gb(grad.data() + offsets[l] + static_cast<std::size_t>(out) * in, out);
    gw.noalias() += delta.transpose() * tape.inputs[l];
    gb += delta.colwise().sum();
    Matrix next = delta * w;
    delta = std::move(next);
  }
  return delta;
}

Vector mlp_apply(const MlpSpec& spec, const ParamVector& params, const Vector& input) {
  spec.validate();
  require_shape(input.size() == spec.input_size(), "mlp_apply: input length mismatch");
  Matrix in = input.transpose();
  Matrix out = mlp_forward(spec, {params.data(), static_cast<std::size_t>(params.size())}, in);
  return out.row(0).transpose();
}

ParamVector mlp_gradient(const MlpSpec& spec, const ParamVector& params, const Vector& input,
                         const Vector& upstream) {
  spec.validate();
  require_shape(input.size() == spec.input_size(), "mlp_gradient: input length mismatch");
  require_shape(upstream.size() == spec.output_size(), "mlp_gradient: upstream length mismatch");
  const std::span<const double> p{params.data(), static_cast<std::size_t>(params.size())};
  MlpTape tape;
  Matrix in = input.transpose();
  mlp_forward(spec, p, in, &tape);
  ParamVector grad = ParamVector::Zero(params.size());
  Matrix up = upstream.transpose();
  mlp_backward(spec, p, tape, up, {grad.data(), static_cast<std::size_t>(grad.size())});
  return grad;
}

void init_glorot(const MlpSpec& spec, std::span<double> params, Rng& rng) {
  spec.validate();
  require_shape(params.size() == spec.param_count(), "init_glorot: parameter count mismatch");
  std::size_t offset = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    for (std::size_t i = 0; i < static_cast<std::size_t>(in) * out; ++i) {
      params[offset++] = rng.uniform(-limit, limit);
    }
    for (int i = 0; i < out; ++i) params[offset++] = 0.0;
  }
}

ParamVector init_glorot(const MlpSpec& spec, Rng& rng) {
  ParamVector p(static_cast<Eigen::Index>(spec.param_count()));
  init_glorot(spec, {p.data(), static_cast<std::size_t>(p.size())}, rng);
  return p;
}

}  // namespace symflow::nn
