#pragma once

#include "symflow/types.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace symflow::sym {

/// A finite symmetry acting on flat sample vectors as a signed permutation
/// plus an optional offset: out[i] = sign[i] * x[source[i]] + offset[i].
/// Every supported kind is an isometry of the Euclidean norm.
class GroupAction {
 public:
  enum class Kind { identity, sign_flip, reflect, permute, circular_shift, reflect_about, composite };

  static GroupAction identity(std::size_t dim);
  /// Negates every component.
  static GroupAction sign_flip(std::size_t dim);
  /// Negates the listed components (e.g. the x-coordinates of a beam).
  static GroupAction reflect(std::size_t dim, const std::vector<std::size_t>& indices);
  /// Node permutation on a node-major vector with `features` values per node;
  /// node i moves to position perm[i].
  static GroupAction permute(const std::vector<std::size_t>& perm, std::size_t features = 1);
  /// Shift by k along the middle axis of an (outer, axis_len, inner) row-major
  /// layout: out[o][a][i] = x[o][(a - k) mod axis_len][i].
  static GroupAction circular_shift(std::size_t outer, std::size_t axis_len, std::size_t inner,
                                    long k);
  static GroupAction circular_shift(std::size_t axis_len, long k) {
    return circular_shift(1, axis_len, 1, k);
  }
  /// Point reflection y -> 2 c - y. Swaps the two mirror solutions of the
  /// four-node graph, whose nodes all share the input value c.
  static GroupAction reflect_about(const Vector& center);

  std::size_t dim() const { return source_.size(); }
  Kind kind() const { return kind_; }
  std::string label() const { return label_; }
  bool has_offset() const { return !offset_.empty(); }

  Vector apply(const Vector& x) const;
  /// Applies only the signed-permutation part. Velocities (differences of
  /// states) transform this way.
  Vector apply_linear(const Vector& x) const;
  /// Row-wise application to a batch.
  Matrix apply_rows(const Matrix& x, bool linear_only = false) const;

  GroupAction inverse() const;
  /// (*this) o other: apply `other` first.
  GroupAction compose(const GroupAction& other) const;
  bool operator==(const GroupAction& other) const;
  bool is_identity() const;

 private:
  GroupAction(Kind kind, std::string label, std::vector<std::size_t> source,
              std::vector<double> sign, std::vector<double> offset);

  Kind kind_;
  std::string label_;
  std::vector<std::size_t> source_;
  std::vector<double> sign_;
  std::vector<double> offset_;  // empty when zero
};

/// Finite group of actions. Element 0 is the identity; the enumeration order
/// is the tie-breaking order for symmetric matching.
class SymmetryGroup {
 public:
  /// Validates identity-first, equal dimensions, inverses, and (for groups of
  /// at most 64 elements) closure under composition.
  explicit SymmetryGroup(std::vector<GroupAction> elements);

  static SymmetryGroup trivial(std::size_t dim);
  static SymmetryGroup sign_flips(std::size_t dim);
  static SymmetryGroup reflections(std::size_t dim, const std::vector<std::size_t>& indices);
  /// All axis_len shifts; closure holds by construction and is not re-checked.
  static SymmetryGroup cyclic_shifts(std::size_t outer, std::size_t axis_len, std::size_t inner);
  static SymmetryGroup solution_swap(const Vector& center);

  std::size_t size() const { return elements_.size(); }
  std::size_t dim() const { return elements_.front().dim(); }
  const GroupAction& operator[](std::size_t i) const { return elements_[i]; }
  const std::vector<GroupAction>& elements() const { return elements_; }

 private:
  struct Unchecked {};
  SymmetryGroup(std::vector<GroupAction> elements, Unchecked);
  std::vector<GroupAction> elements_;
};

/// Serializable description of the matching group of a dataset record.
/// The concrete group may depend on the record (solution_swap reflects about
/// the record's input).
struct GroupDescriptor {
  enum class Kind { trivial, sign_flip, reflect_all, solution_swap, cyclic_shift };
  Kind kind = Kind::trivial;
  // cyclic_shift layout: (outer, axis_len, inner) of the sample vector.
  std::size_t outer = 1, axis_len = 0, inner = 1;

  /// Group for a record with sample dimension `dim` and conditioning `cond`.
  SymmetryGroup build(std::size_t dim, const Vector& cond) const;

  nlohmann::json to_json() const;
  static GroupDescriptor from_json(const nlohmann::json& j);
  std::string name() const;
};

}  // namespace symflow::sym
