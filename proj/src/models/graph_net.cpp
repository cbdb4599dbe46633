#include "symflow/models/networks.hpp"

namespace symflow::models {

namespace {

struct GraphNetTape final : flow::Tape {
  nn::MlpTape enc, dec;
  std::vector<nn::MlpTape> msg, upd;
};

}  // namespace

GraphNet::GraphNet(std::size_t nodes, std::vector<std::pair<std::size_t, std::size_t>> edges,
                   std::size_t state_features, std::size_t cond_features, const ArchConfig& arch)
    : nodes_(nodes), fs_(state_features), fc_(cond_features), edges_(std::move(edges)), arch_(arch) {
  arch_.validate();
  if (nodes == 0 || state_features == 0) throw ShapeError("GraphNet: need at least one node and feature");
  for (const auto& [a, b] : edges_) {
    if (a >= nodes || b >= nodes || a == b) throw ShapeError("GraphNet: invalid edge");
    directed_.emplace_back(a, b);
    directed_.emplace_back(b, a);
  }
  const int h = arch.hidden;
  BlockLayout layout;
  enc_ = layout.mlp(static_cast<int>(fs_ + fc_) + kTimeEmbedding, h, arch.depth, h, arch.activation);
  for (int r = 0; r < arch.rounds; ++r) {
    msg_.push_back(layout.mlp(2 * h, h, arch.depth, h, arch.activation));
    upd_.push_back(layout.mlp(2 * h, h, arch.depth, h, arch.activation));
  }
  dec_ = layout.mlp(h, h, arch.depth, static_cast<int>(fs_), arch.activation);
  params_ = ParamVector::Zero(static_cast<Eigen::Index>(layout.total()));
  Rng rng(arch.init_seed, 0x67726170);
  init_block(enc_, params_, rng);
  for (int r = 0; r < arch.rounds; ++r) {
    init_block(msg_[r], params_, rng);
    init_block(upd_[r], params_, rng);
  }
  init_block(dec_, params_, rng);
}

Matrix GraphNet::forward(const Matrix& x, const Vector& t, const Matrix& cond,
                         std::unique_ptr<flow::Tape>* tape) const {
  check_inputs(x, t, cond);
  const Eigen::Index b_count = x.rows();
  const auto n = static_cast<Eigen::Index>(nodes_);
  const auto fs = static_cast<Eigen::Index>(fs_);
  const auto fc = static_cast<Eigen::Index>(fc_);
  const auto e_count = static_cast<Eigen::Index>(directed_.size());
  const Eigen::Index h = arch_.hidden;
  const Matrix te = time_embedding(t);

  auto record = tape ? std::make_unique<GraphNetTape>() : nullptr;
  if (record) {
    record->msg.resize(msg_.size());
    record->upd.resize(upd_.size());
  }
  Matrix enc_in(b_count * n, fs + fc + kTimeEmbedding);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      auto row = enc_in.row(b * n + i);
      row.segment(0, fs) = x.row(b).segment(i * fs, fs);
      row.segment(fs, fc) = cond.row(b).segment(i * fc, fc);
      row.segment(fs + fc, kTimeEmbedding) = te.row(b);
    }
  }
  Matrix hid = enc_.forward(params_, enc_in, record ? &record->enc : nullptr);

  for (std::size_t r = 0; r < msg_.size(); ++r) {
    Matrix msg_in(b_count * e_count, 2 * h);
    for (Eigen::Index b = 0; b < b_count; ++b) {
      for (Eigen::Index e = 0; e < e_count; ++e) {
        const auto [recv, send] = directed_[static_cast<std::size_t>(e)];
        msg_in.row(b * e_count + e) << hid.row(b * n + static_cast<Eigen::Index>(recv)),
            hid.row(b * n + static_cast<Eigen::Index>(send));
      }
    }
    const Matrix msgs = msg_[r].forward(params_, msg_in, record ? &record->msg[r] : nullptr);
    Matrix upd_in(b_count * n, 2 * h);
    upd_in.leftCols(h) = hid;
    upd_in.rightCols(h).setZero();
    for (Eigen::Index b = 0; b < b_count; ++b) {
      for (Eigen::Index e = 0; e < e_count; ++e) {
        upd_in.row(b * n + static_cast<Eigen::Index>(directed_[static_cast<std::size_t>(e)].first)).tail(h) +=
            msgs.row(b * e_count + e);
      }
    }
    hid += upd_[r].forward(params_, upd_in, record ? &record->upd[r] : nullptr);
  }
  const Matrix out_nodes = dec_.forward(params_, hid, record ? &record->dec : nullptr);
  Matrix out(b_count, n * fs);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) out.row(b).segment(i * fs, fs) = out_nodes.row(b * n + i);
  }
  if (tape) *tape = std::move(record);
  return out;
}

void GraphNet::backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const {
  const auto& tp = dynamic_cast<const GraphNetTape&>(tape);
  const Eigen::Index b_count = upstream.rows();
  const auto n = static_cast<Eigen::Index>(nodes_);
  const auto fs = static_cast<Eigen::Index>(fs_);
  const auto e_count = static_cast<Eigen::Index>(directed_.size());
  const Eigen::Index h = arch_.hidden;

  Matrix d_nodes(b_count * n, fs);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) d_nodes.row(b * n + i) = upstream.row(b).segment(i * fs, fs);
  }
  Matrix d_hid = dec_.backward(params_, tp.dec, d_nodes, grad);
  for (std::size_t rr = msg_.size(); rr-- > 0;) {
    const Matrix d_upd_in = upd_[rr].backward(params_, tp.upd[rr], d_hid, grad);
    d_hid += d_upd_in.leftCols(h);
    Matrix d_msg(b_count * e_count, h);
    for (Eigen::Index b = 0; b < b_count; ++b) {
      for (Eigen::Index e = 0; e < e_count; ++e) {
        d_msg.row(b * e_count + e) =
            d_upd_in.row(b * n + static_cast<Eigen::Index>(directed_[static_cast<std::size_t>(e)].first)).tail(h);
      }
    }
    const Matrix d_msg_in = msg_[rr].backward(params_, tp.msg[rr], d_msg, grad);
    for (Eigen::Index b = 0; b < b_count; ++b) {
      for (Eigen::Index e = 0; e < e_count; ++e) {
        const auto [recv, send] = directed_[static_cast<std::size_t>(e)];
        d_hid.row(b * n + static_cast<Eigen::Index>(recv)) += d_msg_in.row(b * e_count + e).head(h);
        d_hid.row(b * n + static_cast<Eigen::Index>(send)) += d_msg_in.row(b * e_count + e).tail(h);
      }
    }
  }
  enc_.backward(params_, tp.enc, d_hid, grad);
}

std::unique_ptr<flow::VelocityModel> GraphNet::clone() const { return std::make_unique<GraphNet>(*this); }

nlohmann::json GraphNet::describe() const {
  return {{"type", "graph_net"}, {"nodes", nodes_}, {"edges", edges_}, {"state_features", fs_},
          {"cond_features", fc_}, {"arch", arch_.to_json()}};
}

}  // namespace symflow::models
