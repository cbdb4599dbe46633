#include "symflow/models/common.hpp"

#include <cmath>
#include <numbers>

namespace symflow::models {

Matrix time_embedding(const Vector& t) {
  Matrix e(t.size(), kTimeEmbedding);
  for (Eigen::Index r = 0; r < t.size(); ++r) {
    double freq = std::numbers::pi;
    for (int k = 0; k < kTimeEmbedding / 2; ++k, freq *= 2.0) {
      e(r, 2 * k) = std::sin(freq * t[r]);
      e(r, 2 * k + 1) = std::cos(freq * t[r]);
    }
  }
  return e;
}

std::span<const double> ParamBlock::view(const ParamVector& params) const {
  return {params.data() + offset, spec.param_count()};
}

std::span<double> ParamBlock::view(std::span<double> grad) const {
  return grad.subspan(offset, spec.param_count());
}

Matrix ParamBlock::forward(const ParamVector& params, const Matrix& in, nn::MlpTape* tape) const {
  return nn::mlp_forward(spec, view(params), in, tape);
}

Matrix ParamBlock::backward(const ParamVector& params, const nn::MlpTape& tape, const Matrix& upstream,
                            std::span<double> grad) const {
  return nn::mlp_backward(spec, view(params), tape, upstream, view(grad));
}

ParamBlock BlockLayout::mlp(int in, int hidden, int depth, int out, nn::Activation act) {
  ParamBlock b;
  b.spec.layer_sizes.push_back(in);
  for (int i = 0; i < depth; ++i) b.spec.layer_sizes.push_back(hidden);
  b.spec.layer_sizes.push_back(out);
  b.spec.activation = act;
  b.spec.validate();
  b.offset = total_;
  total_ += b.spec.param_count();
  return b;
}

std::size_t BlockLayout::raw(std::size_t n) {
  const std::size_t at = total_;
  total_ += n;
  return at;
}

void init_block(const ParamBlock& block, ParamVector& params, Rng& rng) {
  nn::init_glorot(block.spec, {params.data() + block.offset, block.spec.param_count()}, rng);
}

void ArchConfig::validate() const {
  if (hidden < 1 || depth < 0 || channels < 1 || conv_layers < 1 || rounds < 0) {
    throw ConfigError("architecture: widths and layer counts must be positive");
  }
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("architecture: kernel must be odd and positive");
}

nlohmann::json ArchConfig::to_json() const {
  return {{"hidden", hidden},     {"depth", depth},
          {"activation", nn::to_string(activation)},
          {"channels", channels}, {"kernel", kernel},
          {"conv_layers", conv_layers}, {"rounds", rounds},
          {"init_seed", init_seed}};
}

ArchConfig ArchConfig::from_json(const nlohmann::json& j) {
  ArchConfig a;
  if (!j.is_object()) throw ConfigError("architecture block must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "hidden") a.hidden = value.get<int>();
    else if (key == "depth") a.depth = value.get<int>();
    else if (key == "activation") a.activation = nn::activation_from_string(value.get<std::string>());
    else if (key == "channels") a.channels = value.get<int>();
    else if (key == "kernel") a.kernel = value.get<int>();
    else if (key == "conv_layers") a.conv_layers = value.get<int>();
    else if (key == "rounds") a.rounds = value.get<int>();
    else if (key == "init_seed") a.init_seed = value.get<std::uint64_t>();
    else throw ConfigError("architecture: unknown key '" + key + "'");
  }
  a.validate();
  return a;
}

}  // namespace symflow::models
