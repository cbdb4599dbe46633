#pragma once

#include <complex>
#include <span>
#include <vector>

namespace symflow::sym {

using Complex = std::complex<double>;

/// Discrete Fourier transform of arbitrary length (mixed radix; Bluestein for
/// large prime factors). Forward uses exp(-2 pi i jk/n); the inverse is scaled
/// by 1/n.
std::vector<Complex> fft(std::span<const Complex> input, bool inverse = false);
std::vector<Complex> fft_real(std::span<const double> input);

/// c[k] = sum_i a[i] * b[(i - k) mod n], computed through the FFT.
std::vector<double> circular_cross_correlation(std::span<const double> a,
                                               std::span<const double> b);

}  // namespace symflow::sym
