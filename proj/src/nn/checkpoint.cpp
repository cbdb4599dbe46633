#include "symflow/nn/checkpoint.hpp"

#include <fstream>

namespace symflow::nn {

nlohmann::json spec_to_json(const MlpSpec& spec) {
  return {{"layer_sizes", spec.layer_sizes}, {"activation", to_string(spec.activation)}};
}

MlpSpec spec_from_json(const nlohmann::json& j) {
  MlpSpec spec;
  spec.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  spec.activation = activation_from_string(j.at("activation").get<std::string>());
  spec.validate();
  return spec;
}

nlohmann::json params_to_json(const ParamVector& params) {
  return std::vector<double>(params.data(), params.data() + params.size());
}

ParamVector params_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const ParamVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void save_checkpoint(const std::filesystem::path& path, const MlpCheckpoint& ckpt) {
  require_shape(static_cast<std::size_t>(ckpt.params.size()) == ckpt.spec.param_count(),
                "save_checkpoint: params do not match spec");
  nlohmann::json j = {{"format", "symflow.mlp.v1"},
                      {"spec", spec_to_json(ckpt.spec)},
                      {"seed", ckpt.seed},
                      {"params", params_to_json(ckpt.params)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
}

MlpCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "symflow.mlp.v1") {
    throw ConfigError("checkpoint " + path.string() + " has unknown format");
  }
  MlpCheckpoint ckpt{spec_from_json(j.at("spec")), params_from_json(j.at("params")),
                     j.at("seed").get<std::uint64_t>()};
  require_shape(static_cast<std::size_t>(ckpt.params.size()) == ckpt.spec.param_count(),
                "checkpoint params do not match spec");
  return ckpt;
}

}  // namespace symflow::nn
