#include "symflow/models/networks.hpp"

namespace symflow::models {

namespace {

struct MlpVelocityTape final : flow::Tape {
  nn::MlpTape net;
};

}  // namespace

MlpVelocity::MlpVelocity(std::size_t dim, std::size_t cond_dim, const ArchConfig& arch)
    : dim_(dim), cond_dim_(cond_dim), arch_(arch) {
  arch_.validate();
  if (dim == 0) throw ShapeError("MlpVelocity: state dimension must be positive");
  BlockLayout layout;
  net_ = layout.mlp(static_cast<int>(dim + cond_dim) + kTimeEmbedding, arch.hidden, arch.depth,
                    static_cast<int>(dim), arch.activation);
  params_ = ParamVector::Zero(static_cast<Eigen::Index>(layout.total()));
  Rng rng(arch.init_seed, 0x6d6c70);
  init_block(net_, params_, rng);
}

Matrix MlpVelocity::forward(const Matrix& x, const Vector& t, const Matrix& cond,
                            std::unique_ptr<flow::Tape>* tape) const {
  check_inputs(x, t, cond);
  Matrix in(x.rows(), net_.spec.input_size());
  in << x, cond, time_embedding(t);
  if (!tape) return net_.forward(params_, in, nullptr);
  auto record = std::make_unique<MlpVelocityTape>();
  Matrix out = net_.forward(params_, in, &record->net);
  *tape = std::move(record);
  return out;
}

void MlpVelocity::backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const {
  const auto& t = dynamic_cast<const MlpVelocityTape&>(tape);
  net_.backward(params_, t.net, upstream, grad);
}

std::unique_ptr<flow::VelocityModel> MlpVelocity::clone() const {
  return std::make_unique<MlpVelocity>(*this);
}

nlohmann::json MlpVelocity::describe() const {
  return {{"type", "mlp"}, {"dim", dim_}, {"cond_dim", cond_dim_}, {"arch", arch_.to_json()}};
}

}  // namespace symflow::models
