#pragma once

#include "symflow/nn/mlp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>

namespace symflow::nn {

struct MlpCheckpoint {
  MlpSpec spec;
  ParamVector params;
  std::uint64_t seed = 0;
};

nlohmann::json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const nlohmann::json& j);

/// Doubles are written with round-trip precision, so save/load is bit-exact.
nlohmann::json params_to_json(const ParamVector& params);
ParamVector params_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const MlpCheckpoint& ckpt);
MlpCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace symflow::nn
