#include "symflow/symmetry/group.hpp"

#include <algorithm>
#include <numeric>

namespace symflow::sym {

GroupAction::GroupAction(Kind kind, std::string label, std::vector<std::size_t> source,
                         std::vector<double> sign, std::vector<double> offset)
    : kind_(kind),
      label_(std::move(label)),
      source_(std::move(source)),
      sign_(std::move(sign)),
      offset_(std::move(offset)) {
  if (!offset_.empty() && std::all_of(offset_.begin(), offset_.end(), [](double v) { return v == 0.0; })) {
    offset_.clear();
  }
}

GroupAction GroupAction::identity(std::size_t dim) {
  std::vector<std::size_t> src(dim);
  std::iota(src.begin(), src.end(), std::size_t{0});
  return GroupAction(Kind::identity, "identity", std::move(src), std::vector<double>(dim, 1.0), {});
}

GroupAction GroupAction::sign_flip(std::size_t dim) {
  std::vector<std::size_t> src(dim);
  std::iota(src.begin(), src.end(), std::size_t{0});
  return GroupAction(Kind::sign_flip, "sign_flip", std::move(src), std::vector<double>(dim, -1.0), {});
}

GroupAction GroupAction::reflect(std::size_t dim, const std::vector<std::size_t>& indices) {
  std::vector<std::size_t> src(dim);
  std::iota(src.begin(), src.end(), std::size_t{0});
  std::vector<double> sign(dim, 1.0);
  for (std::size_t i : indices) {
    require_shape(i < dim, "reflect: index out of range");
    sign[i] = -1.0;
  }
  return GroupAction(Kind::reflect, "reflect_x", std::move(src), std::move(sign), {});
}

GroupAction GroupAction::permute(const std::vector<std::size_t>& perm, std::size_t features) {
  const std::size_t nodes = perm.size();
  std::vector<bool> seen(nodes, false);
  for (std::size_t p : perm) {
    require_shape(p < nodes && !seen[p], "permute: not a permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> src(nodes * features);
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t f = 0; f < features; ++f) src[perm[i] * features + f] = i * features + f;
  }
  std::string label = "permute(";
  for (std::size_t i = 0; i < nodes; ++i) label += (i ? "," : "") + std::to_string(perm[i]);
  label += ")";
  return GroupAction(Kind::permute, label, std::move(src), std::vector<double>(nodes * features, 1.0),
                     {});
}

GroupAction GroupAction::circular_shift(std::size_t outer, std::size_t axis_len, std::size_t inner,
                                        long k) {
  require_shape(axis_len > 0, "circular_shift: empty axis");
  const auto n = static_cast<long>(axis_len);
  const std::size_t shift = static_cast<std::size_t>(((k % n) + n) % n);
  std::vector<std::size_t> src(outer * axis_len * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t a = 0; a < axis_len; ++a) {
      const std::size_t from = (a + axis_len - shift) % axis_len;
      for (std::size_t i = 0; i < inner; ++i) {
        src[(o * axis_len + a) * inner + i] = (o * axis_len + from) * inner + i;
      }
    }
  }
  return GroupAction(shift == 0 ? Kind::identity : Kind::circular_shift,
                     shift == 0 ? "identity" : "circular_shift(" + std::to_string(shift) + ")",
                     std::move(src), std::vector<double>(outer * axis_len * inner, 1.0), {});
}

GroupAction GroupAction::reflect_about(const Vector& center) {
  const auto dim = static_cast<std::size_t>(center.size());
  std::vector<std::size_t> src(dim);
  std::iota(src.begin(), src.end(), std::size_t{0});
  std::vector<double> offset(dim);
  for (std::size_t i = 0; i < dim; ++i) offset[i] = 2.0 * center[static_cast<Eigen::Index>(i)];
  return GroupAction(Kind::reflect_about, "solution_swap", std::move(src),
                     std::vector<double>(dim, -1.0), std::move(offset));
}

Vector GroupAction::apply(const Vector& x) const {
  require_shape(static_cast<std::size_t>(x.size()) == dim(),
                "group action of dimension " + std::to_string(dim()) + " applied to vector of length " +
                    std::to_string(x.size()));
  Vector out(x.size());
  for (std::size_t i = 0; i < source_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = sign_[i] * x[static_cast<Eigen::Index>(source_[i])] +
                                        (offset_.empty() ? 0.0 : offset_[i]);
  }
  return out;
}

Vector GroupAction::apply_linear(const Vector& x) const {
  require_shape(static_cast<std::size_t>(x.size()) == dim(), "group action dimension mismatch");
  Vector out(x.size());
  for (std::size_t i = 0; i < source_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = sign_[i] * x[static_cast<Eigen::Index>(source_[i])];
  }
  return out;
}

Matrix GroupAction::apply_rows(const Matrix& x, bool linear_only) const {
  require_shape(static_cast<std::size_t>(x.cols()) == dim(), "group action dimension mismatch");
  Matrix out(x.rows(), x.cols());
  const bool add = !linear_only && !offset_.empty();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double* in = x.row(r).data();
    double* o = out.row(r).data();
    for (std::size_t i = 0; i < source_.size(); ++i) {
      o[i] = sign_[i] * in[source_[i]] + (add ? offset_[i] : 0.0);
    }
  }
  return out;
}

GroupAction GroupAction::inverse() const {
  const std::size_t n = dim();
  std::vector<std::size_t> src(n);
  std::vector<double> sign(n);
  std::vector<double> offset(offset_.empty() ? 0 : n);
  for (std::size_t i = 0; i < n; ++i) {
    src[source_[i]] = i;
    sign[source_[i]] = sign_[i];
    if (!offset_.empty()) offset[source_[i]] = -sign_[i] * offset_[i];
  }
  std::string label = label_;
  if (kind_ == Kind::circular_shift || kind_ == Kind::permute || kind_ == Kind::composite) {
    label = "inverse(" + label_ + ")";
  }
  return GroupAction(kind_, label, std::move(src), std::move(sign), std::move(offset));
}

GroupAction GroupAction::compose(const GroupAction& other) const {
  require_shape(dim() == other.dim(), "compose: dimension mismatch");
  const std::size_t n = dim();
  std::vector<std::size_t> src(n);
  std::vector<double> sign(n);
  std::vector<double> offset(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t mid = source_[i];
    src[i] = other.source_[mid];
    sign[i] = sign_[i] * other.sign_[mid];
    offset[i] = sign_[i] * (other.offset_.empty() ? 0.0 : other.offset_[mid]) +
                (offset_.empty() ? 0.0 : offset_[i]);
  }
  GroupAction result(Kind::composite, label_ + "*" + other.label_, std::move(src), std::move(sign),
                     std::move(offset));
  if (result.is_identity()) return identity(n);
  return result;
}

bool GroupAction::operator==(const GroupAction& other) const {
  if (source_ != other.source_ || sign_ != other.sign_) return false;
  if (offset_.empty() && other.offset_.empty()) return true;
  const std::size_t n = dim();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = offset_.empty() ? 0.0 : offset_[i];
    const double b = other.offset_.empty() ? 0.0 : other.offset_[i];
    if (a != b) return false;
  }
  return true;
}

bool GroupAction::is_identity() const {
  if (!offset_.empty()) return false;
  for (std::size_t i = 0; i < source_.size(); ++i) {
    if (source_[i] != i || sign_[i] != 1.0) return false;
  }
  return true;
}

SymmetryGroup::SymmetryGroup(std::vector<GroupAction> elements, Unchecked)
    : elements_(std::move(elements)) {}

SymmetryGroup::SymmetryGroup(std::vector<GroupAction> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw std::invalid_argument("symmetry group must not be empty");
  if (!elements_.front().is_identity()) {
    throw std::invalid_argument("symmetry group must list the identity first");
  }
  const std::size_t d = elements_.front().dim();
  for (const auto& g : elements_) require_shape(g.dim() == d, "symmetry group: mixed dimensions");
  auto contains = [&](const GroupAction& a) {
    return std::any_of(elements_.begin(), elements_.end(), [&](const GroupAction& e) { return e == a; });
  };
  for (const auto& g : elements_) {
    if (!contains(g.inverse())) {
      throw std::invalid_argument("symmetry group not closed under inverse (" + g.label() + ")");
    }
  }
  if (elements_.size() <= 64) {
    for (const auto& a : elements_) {
      for (const auto& b : elements_) {
        if (!contains(a.compose(b))) {
          throw std::invalid_argument("symmetry group not closed under composition (" + a.label() +
                                      " * " + b.label() + ")");
        }
      }
    }
  }
}

SymmetryGroup SymmetryGroup::trivial(std::size_t dim) {
  return SymmetryGroup({GroupAction::identity(dim)}, Unchecked{});
}

SymmetryGroup SymmetryGroup::sign_flips(std::size_t dim) {
  return SymmetryGroup({GroupAction::identity(dim), GroupAction::sign_flip(dim)}, Unchecked{});
}

SymmetryGroup SymmetryGroup::reflections(std::size_t dim, const std::vector<std::size_t>& indices) {
  return SymmetryGroup({GroupAction::identity(dim), GroupAction::reflect(dim, indices)}, Unchecked{});
}

SymmetryGroup SymmetryGroup::cyclic_shifts(std::size_t outer, std::size_t axis_len, std::size_t inner) {
  std::vector<GroupAction> elems;
  elems.reserve(axis_len);
  for (std::size_t k = 0; k < axis_len; ++k) {
    elems.push_back(GroupAction::circular_shift(outer, axis_len, inner, static_cast<long>(k)));
  }
  return SymmetryGroup(std::move(elems), Unchecked{});
}

SymmetryGroup SymmetryGroup::solution_swap(const Vector& center) {
  return SymmetryGroup({GroupAction::identity(static_cast<std::size_t>(center.size())),
                        GroupAction::reflect_about(center)},
                       Unchecked{});
}

SymmetryGroup GroupDescriptor::build(std::size_t dim, const Vector& cond) const {
  switch (kind) {
    case Kind::trivial:
      return SymmetryGroup::trivial(dim);
    case Kind::sign_flip:
    case Kind::reflect_all:
      return SymmetryGroup::sign_flips(dim);
    case Kind::solution_swap:
      require_shape(static_cast<std::size_t>(cond.size()) == dim,
                    "solution_swap: condition must have the sample dimension");
      return SymmetryGroup::solution_swap(cond);
    case Kind::cyclic_shift:
      require_shape(outer * axis_len * inner == dim, "cyclic_shift: layout does not match sample");
      return SymmetryGroup::cyclic_shifts(outer, axis_len, inner);
  }
  throw std::logic_error("unreachable");
}

std::string GroupDescriptor::name() const {
  switch (kind) {
    case Kind::trivial:
      return "trivial";
    case Kind::sign_flip:
      return "sign_flip";
    case Kind::reflect_all:
      return "reflect_x";
    case Kind::solution_swap:
      return "solution_swap";
    case Kind::cyclic_shift:
      return "cyclic_shift";
  }
  return "?";
}

nlohmann::json GroupDescriptor::to_json() const {
  nlohmann::json j = {{"kind", name()}};
  if (kind == Kind::cyclic_shift) {
    j["layout"] = {outer, axis_len, inner};
  }
  return j;
}

GroupDescriptor GroupDescriptor::from_json(const nlohmann::json& j) {
  GroupDescriptor d;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "trivial") {
    d.kind = Kind::trivial;
  } else if (kind == "sign_flip") {
    d.kind = Kind::sign_flip;
  } else if (kind == "reflect_x") {
    d.kind = Kind::reflect_all;
  } else if (kind == "solution_swap") {
    d.kind = Kind::solution_swap;
  } else if (kind == "cyclic_shift") {
    d.kind = Kind::cyclic_shift;
    const auto layout = j.at("layout").get<std::vector<std::size_t>>();
    if (layout.size() != 3) throw ConfigError("cyclic_shift layout needs 3 entries");
    d.outer = layout[0];
    d.axis_len = layout[1];
    d.inner = layout[2];
  } else {
    throw ConfigError("unknown group kind '" + kind + "'");
  }
  return d;
}

}  // namespace symflow::sym
