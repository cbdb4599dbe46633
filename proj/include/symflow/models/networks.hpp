#pragma once

#include "symflow/flow/velocity_model.hpp"
#include "symflow/models/common.hpp"

#include <utility>
#include <vector>

namespace symflow::models {

/// Plain MLP on [x, cond, time embedding].
class MlpVelocity final : public flow::VelocityModel {
 public:
  MlpVelocity(std::size_t dim, std::size_t cond_dim, const ArchConfig& arch);

  std::size_t dim() const override { return dim_; }
  std::size_t cond_dim() const override { return cond_dim_; }
  Matrix forward(const Matrix& x, const Vector& t, const Matrix& cond,
                 std::unique_ptr<flow::Tape>* tape = nullptr) const override;
  void backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const override;
  std::unique_ptr<flow::VelocityModel> clone() const override;
  nlohmann::json describe() const override;

 private:
  std::size_t dim_, cond_dim_;
  ArchConfig arch_;
  ParamBlock net_;
};

/// Permutation-equivariant set model over `nodes` elements. Node i carries
/// state features x[i*Fs..] and condition features c[i*Fc..]; with
/// f_i = [x_i, c_i] and e the time embedding,
/// v_i = rho(phi([f_i, e]) + sum_{j != i} psi([f_i, f_j, e])).
class SetNet final : public flow::VelocityModel {
 public:
  SetNet(std::size_t nodes, std::size_t state_features, std::size_t cond_features, const ArchConfig& arch);

  std::size_t dim() const override { return nodes_ * fs_; }
  std::size_t cond_dim() const override { return nodes_ * fc_; }
  Matrix forward(const Matrix& x, const Vector& t, const Matrix& cond,
                 std::unique_ptr<flow::Tape>* tape = nullptr) const override;
  void backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const override;
  std::unique_ptr<flow::VelocityModel> clone() const override;
  nlohmann::json describe() const override;

 private:
  std::size_t nodes_, fs_, fc_;
  ArchConfig arch_;
  ParamBlock phi_, psi_, rho_;
};

/// Message passing on an undirected graph: encoder, `rounds` residual rounds
/// h_i += upd_r([h_i, sum_{j ~ i} msg_r([h_i, h_j])]), decoder. Equivariant
/// under every automorphism of the graph.
class GraphNet final : public flow::VelocityModel {
 public:
  GraphNet(std::size_t nodes, std::vector<std::pair<std::size_t, std::size_t>> edges,
           std::size_t state_features, std::size_t cond_features, const ArchConfig& arch);

  std::size_t dim() const override { return nodes_ * fs_; }
  std::size_t cond_dim() const override { return nodes_ * fc_; }
  Matrix forward(const Matrix& x, const Vector& t, const Matrix& cond,
                 std::unique_ptr<flow::Tape>* tape = nullptr) const override;
  void backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const override;
  std::unique_ptr<flow::VelocityModel> clone() const override;
  nlohmann::json describe() const override;

 private:
  std::size_t nodes_, fs_, fc_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;   // undirected
  std::vector<std::pair<std::size_t, std::size_t>> directed_;  // (receiver, sender)
  ArchConfig arch_;
  ParamBlock enc_, dec_;
  std::vector<ParamBlock> msg_, upd_;
};

/// Field on a (slices x width) grid, flattened slice-major. Slices act as
/// channels of circular 1D convolutions along the periodic width axis. A
/// one-hidden-layer MLP embeds [cond, time embedding]; every layer adds a bias
/// affine in [cond, time embedding, embedding] and in the spatial mean of its
/// input, so the net is exactly equivariant under circular shifts of the
/// width axis. The output adds a per-slice linear skip alpha_s(cond, t) x_s.
class CircConvNet final : public flow::VelocityModel {
 public:
  CircConvNet(std::size_t slices, std::size_t width, std::size_t cond_dim, const ArchConfig& arch);

  std::size_t dim() const override { return slices_ * width_; }
  std::size_t cond_dim() const override { return cond_dim_; }
  Matrix forward(const Matrix& x, const Vector& t, const Matrix& cond,
                 std::unique_ptr<flow::Tape>* tape = nullptr) const override;
  void backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const override;
  std::unique_ptr<flow::VelocityModel> clone() const override;
  nlohmann::json describe() const override;

 private:
  struct Layer {
    int in = 0, out = 0;
    std::size_t w = 0, b = 0, a = 0, m = 0;  // parameter offsets
  };
  std::size_t slices_, width_, cond_dim_;
  ArchConfig arch_;
  std::vector<Layer> layers_;
  ParamBlock embed_;
  std::size_t skip_ = 0;
};

/// Velocity model for padded beam trajectories. The state holds the
/// x-coordinate of nodes 1..N over `steps` time steps (time-major); the
/// condition is [n/N, sum L / 10, L(N), C(N), K(N), mask(N)]. Each node's
/// time series is encoded together with its parameters, the encodings are
/// mixed with both chain neighbours and a masked mean over the beam, and a
/// decoder emits the node's velocity series, plus a linear skip alpha(t) x
/// with alpha affine in the time embedding. Padded nodes output zero.
class BeamNet final : public flow::VelocityModel {
 public:
  BeamNet(std::size_t nodes, std::size_t steps, const ArchConfig& arch);

  static std::size_t condition_size(std::size_t nodes) { return 2 + 4 * nodes; }
  static std::size_t mask_offset(std::size_t nodes) { return 2 + 3 * nodes; }

  std::size_t dim() const override { return nodes_ * steps_; }
  std::size_t cond_dim() const override { return condition_size(nodes_); }
  Matrix forward(const Matrix& x, const Vector& t, const Matrix& cond,
                 std::unique_ptr<flow::Tape>* tape = nullptr) const override;
  void backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const override;
  std::unique_ptr<flow::VelocityModel> clone() const override;
  nlohmann::json describe() const override;

 private:
  static constexpr int kNodeFeatures = 8;
  std::size_t nodes_, steps_;
  ArchConfig arch_;
  ParamBlock enc_, dec_;
  std::size_t skip_ = 0;
};

}  // namespace symflow::models
