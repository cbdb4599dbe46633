#include "symflow/models/networks.hpp"

namespace symflow::models {

namespace {

struct SetNetTape final : flow::Tape {
  nn::MlpTape phi, psi, rho;
};

}  // namespace

SetNet::SetNet(std::size_t nodes, std::size_t state_features, std::size_t cond_features,
               const ArchConfig& arch)
    : nodes_(nodes), fs_(state_features), fc_(cond_features), arch_(arch) {
  arch_.validate();
  if (nodes == 0 || state_features == 0) throw ShapeError("SetNet: need at least one node and feature");
  const int f = static_cast<int>(fs_ + fc_);
  BlockLayout layout;
  phi_ = layout.mlp(f + kTimeEmbedding, arch.hidden, arch.depth, arch.hidden, arch.activation);
  psi_ = layout.mlp(2 * f + kTimeEmbedding, arch.hidden, arch.depth, arch.hidden, arch.activation);
  rho_ = layout.mlp(arch.hidden, arch.hidden, arch.depth, static_cast<int>(fs_), arch.activation);
  params_ = ParamVector::Zero(static_cast<Eigen::Index>(layout.total()));
  Rng rng(arch.init_seed, 0x736574);
  init_block(phi_, params_, rng);
  init_block(psi_, params_, rng);
  init_block(rho_, params_, rng);
}

Matrix SetNet::forward(const Matrix& x, const Vector& t, const Matrix& cond,
                       std::unique_ptr<flow::Tape>* tape) const {
  check_inputs(x, t, cond);
  const Eigen::Index b_count = x.rows();
  const auto n = static_cast<Eigen::Index>(nodes_);
  const auto fs = static_cast<Eigen::Index>(fs_);
  const auto fc = static_cast<Eigen::Index>(fc_);
  const Eigen::Index f = fs + fc;
  const Matrix te = time_embedding(t);

  Matrix phi_in(b_count * n, f + kTimeEmbedding);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      auto row = phi_in.row(b * n + i);
      row.segment(0, fs) = x.row(b).segment(i * fs, fs);
      row.segment(fs, fc) = cond.row(b).segment(i * fc, fc);
      row.segment(f, kTimeEmbedding) = te.row(b);
    }
  }
  auto record = tape ? std::make_unique<SetNetTape>() : nullptr;
  Matrix agg = phi_.forward(params_, phi_in, record ? &record->phi : nullptr);

  if (n > 1) {
    Matrix psi_in(b_count * n * (n - 1), 2 * f + kTimeEmbedding);
    Eigen::Index r = 0;
    for (Eigen::Index b = 0; b < b_count; ++b) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == i) continue;
          auto row = psi_in.row(r++);
          row.segment(0, f) = phi_in.row(b * n + i).segment(0, f);
          row.segment(f, f) = phi_in.row(b * n + j).segment(0, f);
          row.segment(2 * f, kTimeEmbedding) = te.row(b);
        }
      }
    }
    const Matrix pair = psi_.forward(params_, psi_in, record ? &record->psi : nullptr);
    for (Eigen::Index node = 0; node < b_count * n; ++node) {
      agg.row(node) += pair.middleRows(node * (n - 1), n - 1).colwise().sum();
    }
  }
  const Matrix out_nodes = rho_.forward(params_, agg, record ? &record->rho : nullptr);
  Matrix out(b_count, n * fs);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) out.row(b).segment(i * fs, fs) = out_nodes.row(b * n + i);
  }
  if (tape) *tape = std::move(record);
  return out;
}

void SetNet::backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const {
  const auto& tp = dynamic_cast<const SetNetTape&>(tape);
  const Eigen::Index b_count = upstream.rows();
  const auto n = static_cast<Eigen::Index>(nodes_);
  const auto fs = static_cast<Eigen::Index>(fs_);
  Matrix d_nodes(b_count * n, fs);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) d_nodes.row(b * n + i) = upstream.row(b).segment(i * fs, fs);
  }
  const Matrix d_agg = rho_.backward(params_, tp.rho, d_nodes, grad);
  phi_.backward(params_, tp.phi, d_agg, grad);
  if (n > 1) {
    Matrix d_pair(b_count * n * (n - 1), d_agg.cols());
    for (Eigen::Index node = 0; node < b_count * n; ++node) {
      d_pair.middleRows(node * (n - 1), n - 1).rowwise() = d_agg.row(node);
    }
    psi_.backward(params_, tp.psi, d_pair, grad);
  }
}

std::unique_ptr<flow::VelocityModel> SetNet::clone() const { return std::make_unique<SetNet>(*this); }

nlohmann::json SetNet::describe() const {
  return {{"type", "set_net"}, {"nodes", nodes_}, {"state_features", fs_},
          {"cond_features", fc_}, {"arch", arch_.to_json()}};
}

}  // namespace symflow::models
