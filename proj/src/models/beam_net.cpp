#include "symflow/models/networks.hpp"

#include <algorithm>

namespace symflow::models {

namespace {

struct BeamNetTape final : flow::Tape {
  nn::MlpTape enc, dec;
  Matrix mask;   // batch x nodes
  Vector count;  // active nodes per sample
  Matrix x, te;
};

}  // namespace

BeamNet::BeamNet(std::size_t nodes, std::size_t steps, const ArchConfig& arch)
    : nodes_(nodes), steps_(steps), arch_(arch) {
  arch_.validate();
  if (nodes < 2 || steps == 0) throw ShapeError("BeamNet: need at least two nodes and one step");
  const int h = arch.hidden;
  const int t = static_cast<int>(steps);
  BlockLayout layout;
  enc_ = layout.mlp(t + kNodeFeatures + kTimeEmbedding, h, arch.depth, h, arch.activation);
  dec_ = layout.mlp(4 * h + kNodeFeatures + kTimeEmbedding, h, arch.depth, t, arch.activation);
  skip_ = layout.raw(kTimeEmbedding + 1);
  params_ = ParamVector::Zero(static_cast<Eigen::Index>(layout.total()));
  Rng rng(arch.init_seed, 0x6265616d);
  init_block(enc_, params_, rng);
  init_block(dec_, params_, rng);
}

Matrix BeamNet::forward(const Matrix& x, const Vector& t, const Matrix& cond,
                        std::unique_ptr<flow::Tape>* tape) const {
  check_inputs(x, t, cond);
  const Eigen::Index batch = x.rows();
  const auto n = static_cast<Eigen::Index>(nodes_);
  const auto steps = static_cast<Eigen::Index>(steps_);
  const Eigen::Index h = arch_.hidden;
  const Matrix te = time_embedding(t);

  Matrix mask(batch, n);
  Vector count(batch);
  Matrix node_feat(batch * n, kNodeFeatures);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto c = cond.row(b);
    const double total = c.segment(2, n).sum();
    double cum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      mask(b, k) = c[2 + 3 * n + k];
      cum += c[2 + k];
      node_feat.row(b * n + k) << c[2 + k], c[2 + n + k], c[2 + 2 * n + k], mask(b, k),
          static_cast<double>(k) / static_cast<double>(n - 1), total > 0 ? cum / total : 0.0, c[0], c[1];
    }
    count[b] = std::max(1.0, mask.row(b).sum());
  }

  Matrix enc_in(batch * n, steps + kNodeFeatures + kTimeEmbedding);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index k = 0; k < n; ++k) {
      auto row = enc_in.row(b * n + k);
      for (Eigen::Index s = 0; s < steps; ++s) row[s] = x(b, s * n + k);
      row.segment(steps, kNodeFeatures) = node_feat.row(b * n + k);
      row.segment(steps + kNodeFeatures, kTimeEmbedding) = te.row(b);
    }
  }
  auto record = tape ? std::make_unique<BeamNetTape>() : nullptr;
  const Matrix enc = enc_.forward(params_, enc_in, record ? &record->enc : nullptr);

  Matrix dec_in = Matrix::Zero(batch * n, 4 * h + kNodeFeatures + kTimeEmbedding);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::RowVectorXd pooled = Eigen::RowVectorXd::Zero(h);
    for (Eigen::Index k = 0; k < n; ++k) pooled += mask(b, k) * enc.row(b * n + k);
    pooled /= count[b];
    for (Eigen::Index k = 0; k < n; ++k) {
      auto row = dec_in.row(b * n + k);
      row.segment(0, h) = enc.row(b * n + k);
      if (k > 0) row.segment(h, h) = mask(b, k - 1) * enc.row(b * n + k - 1);
      if (k + 1 < n) row.segment(2 * h, h) = mask(b, k + 1) * enc.row(b * n + k + 1);
      row.segment(3 * h, h) = pooled;
      row.segment(4 * h, kNodeFeatures) = node_feat.row(b * n + k);
      row.segment(4 * h + kNodeFeatures, kTimeEmbedding) = te.row(b);
    }
  }
  const Matrix dec = dec_.forward(params_, dec_in, record ? &record->dec : nullptr);
  const auto skip_w = params_.segment(static_cast<Eigen::Index>(skip_), kTimeEmbedding);
  const double skip_b = params_[static_cast<Eigen::Index>(skip_) + kTimeEmbedding];
  Matrix out(batch, n * steps);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double alpha = te.row(b).dot(skip_w) + skip_b;
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index s = 0; s < steps; ++s) {
        out(b, s * n + k) = mask(b, k) * (dec(b * n + k, s) + alpha * x(b, s * n + k));
      }
    }
  }
  if (record) {
    record->mask = std::move(mask);
    record->count = std::move(count);
    record->x = x;
    record->te = te;
    *tape = std::move(record);
  }
  return out;
}

void BeamNet::backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const {
  const auto& tp = dynamic_cast<const BeamNetTape&>(tape);
  const Eigen::Index batch = upstream.rows();
  const auto n = static_cast<Eigen::Index>(nodes_);
  const auto steps = static_cast<Eigen::Index>(steps_);
  const Eigen::Index h = arch_.hidden;

  Matrix d_dec(batch * n, steps);
  auto g_skip = grad.subspan(skip_, kTimeEmbedding + 1);
  for (Eigen::Index b = 0; b < batch; ++b) {
    double d_alpha = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index s = 0; s < steps; ++s) {
        d_dec(b * n + k, s) = tp.mask(b, k) * upstream(b, s * n + k);
        d_alpha += d_dec(b * n + k, s) * tp.x(b, s * n + k);
      }
    }
    for (int j = 0; j < kTimeEmbedding; ++j) g_skip[static_cast<std::size_t>(j)] += d_alpha * tp.te(b, j);
    g_skip[kTimeEmbedding] += d_alpha;
  }
  const Matrix d_in = dec_.backward(params_, tp.dec, d_dec, grad);
  Matrix d_enc(batch * n, h);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::RowVectorXd d_pool = Eigen::RowVectorXd::Zero(h);
    for (Eigen::Index k = 0; k < n; ++k) d_pool += d_in.row(b * n + k).segment(3 * h, h);
    d_pool /= tp.count[b];
    for (Eigen::Index k = 0; k < n; ++k) {
      auto row = d_enc.row(b * n + k);
      row = d_in.row(b * n + k).segment(0, h) + tp.mask(b, k) * d_pool;
      if (k + 1 < n) row += tp.mask(b, k) * d_in.row(b * n + k + 1).segment(h, h);
      if (k > 0) row += tp.mask(b, k) * d_in.row(b * n + k - 1).segment(2 * h, h);
    }
  }
  enc_.backward(params_, tp.enc, d_enc, grad);
}

std::unique_ptr<flow::VelocityModel> BeamNet::clone() const { return std::make_unique<BeamNet>(*this); }

nlohmann::json BeamNet::describe() const {
  return {{"type", "beam_net"}, {"nodes", nodes_}, {"steps", steps_}, {"arch", arch_.to_json()}};
}

}  // namespace symflow::models
