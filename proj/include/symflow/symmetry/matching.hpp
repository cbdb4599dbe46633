#pragma once

#include "symflow/symmetry/group.hpp"

#include <cstddef>
#include <span>

namespace symflow::sym {

enum class MatchCost { sq_euclidean };

struct MatchResult {
  Vector target;        // g~ . x1
  std::size_t element;  // index of g~ in the group enumeration
  double cost;
};

/// argmin over the group of ||x0 - g . x1||^2; ties go to the earliest element.
MatchResult symmetric_match(const Vector& x0, const Vector& x1, const SymmetryGroup& group,
                            MatchCost cost = MatchCost::sq_euclidean);

/// Shift k maximizing sum_i x0[i] x1[(i - k) mod n], i.e. minimizing
/// ||x0 - shift_k(x1)||^2. Ties resolve to the smallest k.
std::size_t best_circular_shift_fft(std::span<const double> x0, std::span<const double> x1);

/// Same, for vectors laid out as (outer, axis_len, inner) with one common shift
/// along the middle axis (e.g. a space-time field shifted in space only).
std::size_t best_circular_shift_fft(std::span<const double> x0, std::span<const double> x1,
                                    std::size_t outer, std::size_t axis_len, std::size_t inner);

/// Chooses the training target for one (prior sample, target) pair.
class Matcher {
 public:
  virtual ~Matcher() = default;
  virtual Vector match(const Vector& x0, const Vector& x1, const Vector& cond) const = 0;
  virtual bool is_identity() const { return false; }
};

class IdentityMatcher final : public Matcher {
 public:
  Vector match(const Vector&, const Vector& x1, const Vector&) const override { return x1; }
  bool is_identity() const override { return true; }
};

/// Symmetric matching over the record's group: enumerates finite groups, uses
/// FFT cross-correlation for cyclic shifts.
class SymmetricMatcher final : public Matcher {
 public:
  explicit SymmetricMatcher(GroupDescriptor descriptor) : descriptor_(descriptor) {}
  Vector match(const Vector& x0, const Vector& x1, const Vector& cond) const override;
  const GroupDescriptor& descriptor() const { return descriptor_; }

 private:
  GroupDescriptor descriptor_;
};

}  // namespace symflow::sym
