#include "symflow/symmetry/fft.hpp"

#include "symflow/types.hpp"

#include <cmath>
#include <numbers>

namespace symflow::sym {

namespace {

std::size_t smallest_factor(std::size_t n) {
  for (std::size_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) return p;
  }
  return n;
}

Complex twiddle(std::size_t k, std::size_t n, double sign) {
  const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

void transform(std::span<const Complex> in, std::size_t stride, std::size_t n, Complex* out,
               double sign);

// Chirp-z evaluation of a length-n DFT through power-of-two transforms.
void bluestein(std::span<const Complex> in, std::size_t stride, std::size_t n, Complex* out,
               double sign) {
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small.
    const std::size_t k2 = (k * k) % (2 * n);
    const double angle = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<Complex> a(m, Complex{}), b(m, Complex{});
  for (std::size_t k = 0; k < n; ++k) a[k] = in[k * stride] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  std::vector<Complex> fa(m), fb(m);
  transform(a, 1, m, fa.data(), -1.0);
  transform(b, 1, m, fb.data(), -1.0);
  for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
  std::vector<Complex> conv(m);
  transform(fa, 1, m, conv.data(), 1.0);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = conv[k] * scale * chirp[k];
}

// Recursive decimation in time on the smallest prime factor.
void transform(std::span<const Complex> in, std::size_t stride, std::size_t n, Complex* out,
               double sign) {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const std::size_t p = smallest_factor(n);
  if (p == n && n > 16) {
    bluestein(in, stride, n, out, sign);
    return;
  }
  if (p == n) {
    for (std::size_t k = 0; k < n; ++k) {
      Complex acc{};
      for (std::size_t j = 0; j < n; ++j) acc += in[j * stride] * twiddle(j * k, n, sign);
      out[k] = acc;
    }
    return;
  }
  const std::size_t m = n / p;
  std::vector<Complex> sub(n);
  for (std::size_t r = 0; r < p; ++r) {
    transform(in.subspan(r * stride), stride * p, m, sub.data() + r * m, sign);
  }
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t r = 0; r < p; ++r) acc += twiddle(r * k, n, sign) * sub[r * m + k % m];
    out[k] = acc;
  }
}

}  // namespace

std::vector<Complex> fft(std::span<const Complex> input, bool inverse) {
  const std::size_t n = input.size();
  if (n == 0) throw ShapeError("fft: empty input");
  std::vector<Complex> out(n);
  transform(input, 1, n, out.data(), inverse ? 1.0 : -1.0);
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out) v *= scale;
  }
  return out;
}

std::vector<Complex> fft_real(std::span<const double> input) {
  std::vector<Complex> c(input.begin(), input.end());
  return fft(c);
}

std::vector<double> circular_cross_correlation(std::span<const double> a, std::span<const double> b) {
  require_shape(a.size() == b.size(), "cross-correlation: length mismatch");
  const auto fa = fft_real(a);
  const auto fb = fft_real(b);
  std::vector<Complex> prod(fa.size());
  for (std::size_t k = 0; k < fa.size(); ++k) prod[k] = fa[k] * std::conj(fb[k]);
  const auto c = fft(prod, true);
  std::vector<double> out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k].real();
  return out;
}

}  // namespace symflow::sym
