#include "symflow/models/networks.hpp"

#include <cmath>

namespace symflow::models {

namespace {

using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;

struct CircConvTape final : flow::Tape {
  Matrix cf;                 // [cond, time embedding, embedding] per sample
  nn::MlpTape emb;
  std::vector<Matrix> cols;  // im2col of each layer input
  std::vector<Matrix> means; // spatial mean of each layer input
  std::vector<Matrix> pre;   // pre-activations of hidden layers
  Matrix x;
};

// h: (batch * width) x channels. Row b * width + s of the result holds the
// k-neighbourhood of s, column block j holding offset j - k/2.
Matrix im2col(const Matrix& h, Eigen::Index batch, Eigen::Index width, int kernel) {
  const Eigen::Index c = h.cols();
  Matrix col(batch * width, c * kernel);
  const int half = kernel / 2;
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index off = j - half;
      for (Eigen::Index s = 0; s < width; ++s) {
        Eigen::Index src = s + off;
        if (src < 0) src += width;
        if (src >= width) src -= width;
        col.row(b * width + s).segment(j * c, c) = h.row(b * width + src);
      }
    }
  }
  return col;
}

Matrix col2im(const Matrix& col, Eigen::Index batch, Eigen::Index width, int kernel, Eigen::Index c) {
  Matrix h = Matrix::Zero(batch * width, c);
  const int half = kernel / 2;
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index off = j - half;
      for (Eigen::Index s = 0; s < width; ++s) {
        Eigen::Index dst = s + off;
        if (dst < 0) dst += width;
        if (dst >= width) dst -= width;
        h.row(b * width + dst) += col.row(b * width + s).segment(j * c, c);
      }
    }
  }
  return h;
}

Matrix spatial_mean(const Matrix& h, Eigen::Index batch, Eigen::Index width) {
  Matrix m(batch, h.cols());
  for (Eigen::Index b = 0; b < batch; ++b) m.row(b) = h.middleRows(b * width, width).colwise().mean();
  return m;
}

}  // namespace

CircConvNet::CircConvNet(std::size_t slices, std::size_t width, std::size_t cond_dim, const ArchConfig& arch)
    : slices_(slices), width_(width), cond_dim_(cond_dim), arch_(arch) {
  arch_.validate();
  if (slices == 0 || width == 0) throw ShapeError("CircConvNet: empty grid");
  const int kc = static_cast<int>(cond_dim) + kTimeEmbedding + arch.channels;
  BlockLayout layout;
  embed_ = layout.mlp(static_cast<int>(cond_dim) + kTimeEmbedding, arch.hidden, 1, arch.channels, arch.activation);
  int in = static_cast<int>(slices);
  for (int l = 0; l <= arch.conv_layers; ++l) {
    Layer layer;
    layer.in = in;
    layer.out = l == arch.conv_layers ? static_cast<int>(slices) : arch.channels;
    layer.w = layout.raw(static_cast<std::size_t>(layer.out) * layer.in * arch.kernel);
    layer.b = layout.raw(static_cast<std::size_t>(layer.out));
    layer.a = layout.raw(static_cast<std::size_t>(layer.out) * kc);
    layer.m = layout.raw(static_cast<std::size_t>(layer.out) * layer.in);
    layers_.push_back(layer);
    in = layer.out;
  }
  skip_ = layout.raw(slices * static_cast<std::size_t>(kc + 1));
  params_ = ParamVector::Zero(static_cast<Eigen::Index>(layout.total()));
  Rng rng(arch.init_seed, 0x636f6e76);
  init_block(embed_, params_, rng);
  for (const auto& layer : layers_) {
    const double fan_in = static_cast<double>(layer.in) * arch.kernel + kc + layer.in;
    const double limit = std::sqrt(6.0 / (fan_in + layer.out));
    auto fill = [&](std::size_t at, std::size_t count) {
      for (std::size_t i = 0; i < count; ++i) params_[static_cast<Eigen::Index>(at + i)] = rng.uniform(-limit, limit);
    };
    fill(layer.w, static_cast<std::size_t>(layer.out) * layer.in * arch.kernel);
    fill(layer.a, static_cast<std::size_t>(layer.out) * kc);
    fill(layer.m, static_cast<std::size_t>(layer.out) * layer.in);
  }
}

Matrix CircConvNet::forward(const Matrix& x, const Vector& t, const Matrix& cond,
                            std::unique_ptr<flow::Tape>* tape) const {
  check_inputs(x, t, cond);
  const Eigen::Index batch = x.rows();
  const auto width = static_cast<Eigen::Index>(width_);
  const auto slices = static_cast<Eigen::Index>(slices_);
  const int kc = static_cast<int>(cond_dim_) + kTimeEmbedding + arch_.channels;

  auto record = tape ? std::make_unique<CircConvTape>() : nullptr;
  Matrix raw(batch, static_cast<Eigen::Index>(cond_dim_) + kTimeEmbedding);
  raw << cond, time_embedding(t);
  Matrix cf(batch, kc);
  cf << raw, embed_.forward(params_, raw, record ? &record->emb : nullptr);

  Matrix h(batch * width, slices);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index sl = 0; sl < slices; ++sl) {
      h.col(sl).segment(b * width, width) = x.row(b).segment(sl * width, width).transpose();
    }
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& ly = layers_[l];
    Matrix col = im2col(h, batch, width, arch_.kernel);
    Matrix mean = spatial_mean(h, batch, width);
    ConstMatMap w(params_.data() + ly.w, ly.out, static_cast<Eigen::Index>(ly.in) * arch_.kernel);
    Eigen::Map<const Eigen::RowVectorXd> bias(params_.data() + ly.b, ly.out);
    ConstMatMap a(params_.data() + ly.a, ly.out, kc);
    ConstMatMap m(params_.data() + ly.m, ly.out, ly.in);
    Matrix z = col * w.transpose();
    Matrix per_sample = cf * a.transpose() + mean * m.transpose();
    per_sample.rowwise() += bias;
    for (Eigen::Index b = 0; b < batch; ++b) z.middleRows(b * width, width).rowwise() += per_sample.row(b);
    if (record) {
      record->cols.push_back(std::move(col));
      record->means.push_back(std::move(mean));
    }
    if (l + 1 < layers_.size()) {
      nn::activate(arch_.activation, z, h);
      if (record) record->pre.push_back(std::move(z));
    } else {
      h = std::move(z);
    }
  }
  ConstMatMap skip(params_.data() + skip_, slices, kc + 1);
  const Matrix alpha = cf * skip.leftCols(kc).transpose() + Matrix::Ones(batch, 1) * skip.col(kc).transpose();
  Matrix out(batch, slices * width);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index sl = 0; sl < slices; ++sl) {
      out.row(b).segment(sl * width, width) =
          h.col(sl).segment(b * width, width).transpose() + alpha(b, sl) * x.row(b).segment(sl * width, width);
    }
  }
  if (record) {
    record->x = x;
    record->cf = std::move(cf);
    *tape = std::move(record);
  }
  return out;
}

void CircConvNet::backward(const flow::Tape& tape, const Matrix& upstream, std::span<double> grad) const {
  const auto& tp = dynamic_cast<const CircConvTape&>(tape);
  const Eigen::Index batch = upstream.rows();
  const auto width = static_cast<Eigen::Index>(width_);
  const auto slices = static_cast<Eigen::Index>(slices_);
  const int kc = static_cast<int>(cond_dim_) + kTimeEmbedding + arch_.channels;

  Matrix dz(batch * width, slices);
  Matrix d_alpha(batch, slices);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index sl = 0; sl < slices; ++sl) {
      dz.col(sl).segment(b * width, width) = upstream.row(b).segment(sl * width, width).transpose();
      d_alpha(b, sl) = upstream.row(b).segment(sl * width, width).dot(tp.x.row(b).segment(sl * width, width));
    }
  }
  ConstMatMap skip(params_.data() + skip_, slices, kc + 1);
  Matrix d_cf = d_alpha * skip.leftCols(kc);
  MatMap g_skip(grad.data() + skip_, slices, kc + 1);
  g_skip.leftCols(kc).noalias() += d_alpha.transpose() * tp.cf;
  g_skip.col(kc) += d_alpha.colwise().sum().transpose();
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& ly = layers_[l];
    const Eigen::Index wcols = static_cast<Eigen::Index>(ly.in) * arch_.kernel;
    ConstMatMap w(params_.data() + ly.w, ly.out, wcols);
    ConstMatMap m(params_.data() + ly.m, ly.out, ly.in);
    ConstMatMap a(params_.data() + ly.a, ly.out, kc);
    MatMap gw(grad.data() + ly.w, ly.out, wcols);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + ly.b, ly.out);
    MatMap ga(grad.data() + ly.a, ly.out, kc);
    MatMap gm(grad.data() + ly.m, ly.out, ly.in);

    Matrix d_sample(batch, ly.out);
    for (Eigen::Index b = 0; b < batch; ++b) d_sample.row(b) = dz.middleRows(b * width, width).colwise().sum();
    gw.noalias() += dz.transpose() * tp.cols[l];
    gb += d_sample.colwise().sum();
    ga.noalias() += d_sample.transpose() * tp.cf;
    gm.noalias() += d_sample.transpose() * tp.means[l];
    d_cf.noalias() += d_sample * a;
    if (l == 0) break;

    Matrix dh = col2im(dz * w, batch, width, arch_.kernel, ly.in);
    const Matrix d_mean = d_sample * m / static_cast<double>(width);
    for (Eigen::Index b = 0; b < batch; ++b) dh.middleRows(b * width, width).rowwise() += d_mean.row(b);
    nn::activation_backward(arch_.activation, tp.pre[l - 1], dh);
    dz = std::move(dh);
  }
  embed_.backward(params_, tp.emb, d_cf.rightCols(arch_.channels), grad);
}

std::unique_ptr<flow::VelocityModel> CircConvNet::clone() const {
  return std::make_unique<CircConvNet>(*this);
}

nlohmann::json CircConvNet::describe() const {
  return {{"type", "circ_conv_net"}, {"slices", slices_}, {"width", width_},
          {"cond_dim", cond_dim_}, {"arch", arch_.to_json()}};
}

}  // namespace symflow::models
