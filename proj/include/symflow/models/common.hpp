#pragma once

#include "symflow/nn/mlp.hpp"
#include "symflow/rng.hpp"
#include "symflow/types.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <vector>

namespace symflow::models {

inline constexpr int kTimeEmbedding = 8;

/// Rows [sin(pi 2^k t), cos(pi 2^k t)] for k = 0..3.
Matrix time_embedding(const Vector& t);

/// An MLP whose weights sit at a fixed offset inside a model's parameter vector.
struct ParamBlock {
  nn::MlpSpec spec;
  std::size_t offset = 0;

  std::span<const double> view(const ParamVector& params) const;
  std::span<double> view(std::span<double> grad) const;
  Matrix forward(const ParamVector& params, const Matrix& in, nn::MlpTape* tape) const;
  /// Accumulates into `grad` (the whole model gradient); returns d/d input.
  Matrix backward(const ParamVector& params, const nn::MlpTape& tape, const Matrix& upstream,
                  std::span<double> grad) const;
};

/// Hands out consecutive parameter ranges.
class BlockLayout {
 public:
  ParamBlock mlp(int in, int hidden, int depth, int out, nn::Activation act);
  /// Plain range of `n` parameters; returns its offset.
  std::size_t raw(std::size_t n);
  std::size_t total() const { return total_; }

 private:
  std::size_t total_ = 0;
};

void init_block(const ParamBlock& block, ParamVector& params, Rng& rng);

/// Width/depth knobs shared by all architectures. Unknown JSON keys are rejected.
struct ArchConfig {
  int hidden = 64;
  int depth = 2;  // hidden layers per MLP
  nn::Activation activation = nn::Activation::silu;
  int channels = 16;    // convolution width
  int kernel = 5;       // odd convolution kernel size
  int conv_layers = 3;  // hidden convolution layers
  int rounds = 3;       // message-passing rounds
  std::uint64_t init_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static ArchConfig from_json(const nlohmann::json& j);
};

}  // namespace symflow::models
