#include "symflow/symmetry/matching.hpp"

#include "symflow/symmetry/fft.hpp"

#include <cmath>
#include <limits>

namespace symflow::sym {

namespace {

double sq_distance(const Vector& a, const Vector& b) { return (a - b).squaredNorm(); }

// Exact sum over all lines of sum_a x0[o][a][i] * x1[o][(a - k) mod n][i].
double direct_correlation(std::span<const double> x0, std::span<const double> x1, std::size_t outer,
                          std::size_t n, std::size_t inner, std::size_t k) {
  double acc = 0.0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t from = (a + n - k) % n;
      for (std::size_t i = 0; i < inner; ++i) {
        acc += x0[(o * n + a) * inner + i] * x1[(o * n + from) * inner + i];
      }
    }
  }
  return acc;
}

void check_layout(std::span<const double> x0, std::span<const double> x1, std::size_t outer,
                  std::size_t n, std::size_t inner) {
  if (n == 0) throw ShapeError("circular shift search: axis length is zero");
  require_shape(x0.size() == x1.size(), "circular shift search: length mismatch");
  require_shape(x0.size() == outer * n * inner, "circular shift search: layout does not match length");
}

}  // namespace

MatchResult symmetric_match(const Vector& x0, const Vector& x1, const SymmetryGroup& group,
                            MatchCost) {
  if (group.size() == 0) throw std::invalid_argument("symmetric_match: empty group");
  require_shape(x0.size() == x1.size(), "symmetric_match: x0/x1 length mismatch");
  MatchResult best{x1, 0, std::numeric_limits<double>::infinity()};
  for (std::size_t g = 0; g < group.size(); ++g) {
    Vector candidate = group[g].apply(x1);
    const double c = sq_distance(x0, candidate);
    if (c < best.cost) best = {std::move(candidate), g, c};
  }
  return best;
}

std::size_t best_circular_shift_fft(std::span<const double> x0, std::span<const double> x1) {
  return best_circular_shift_fft(x0, x1, 1, x0.size(), 1);
}

std::size_t best_circular_shift_fft(std::span<const double> x0, std::span<const double> x1,
                                    std::size_t outer, std::size_t n, std::size_t inner) {
  check_layout(x0, x1, outer, n, inner);
  std::vector<Complex> spectrum(n, Complex{});
  std::vector<Complex> line0(n), line1(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t a = 0; a < n; ++a) {
        line0[a] = x0[(o * n + a) * inner + i];
        line1[a] = x1[(o * n + a) * inner + i];
      }
      const auto f0 = fft(line0);
      const auto f1 = fft(line1);
      for (std::size_t k = 0; k < n; ++k) spectrum[k] += f0[k] * std::conj(f1[k]);
    }
  }
  const auto corr = fft(spectrum, true);

  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& c : corr) peak = std::max(peak, c.real());
  double norm0 = 0.0, norm1 = 0.0;
  for (std::size_t j = 0; j < x0.size(); ++j) {
    norm0 += x0[j] * x0[j];
    norm1 += x1[j] * x1[j];
  }
  // Shifts whose FFT correlation is within rounding of the peak are re-scored
  // exactly so near-ties resolve like the direct definition.
  const double tol = 1e-10 * std::sqrt(norm0 * norm1) + 1e-300;
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (corr[k].real() < peak - tol) continue;
    const double exact = direct_correlation(x0, x1, outer, n, inner, k);
    if (exact > best_value) {
      best_value = exact;
      best = k;
    }
  }
  return best;
}

Vector SymmetricMatcher::match(const Vector& x0, const Vector& x1, const Vector& cond) const {
  if (descriptor_.kind == GroupDescriptor::Kind::cyclic_shift) {
    const std::span<const double> s0{x0.data(), static_cast<std::size_t>(x0.size())};
    const std::span<const double> s1{x1.data(), static_cast<std::size_t>(x1.size())};
    const std::size_t k =
        best_circular_shift_fft(s0, s1, descriptor_.outer, descriptor_.axis_len, descriptor_.inner);
    return GroupAction::circular_shift(descriptor_.outer, descriptor_.axis_len, descriptor_.inner,
                                       static_cast<long>(k))
        .apply(x1);
  }
  const auto group = descriptor_.build(static_cast<std::size_t>(x1.size()), cond);
  return symmetric_match(x0, x1, group).target;
}

}  // namespace symflow::sym
