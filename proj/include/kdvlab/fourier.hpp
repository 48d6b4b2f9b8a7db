#pragma once

#include <complex>
#include <vector>

namespace kdvlab::fft {

using cvec = std::vector<std::complex<double>>;

/// Forward DFT with coefficient normalization: X_k = (1/n) sum_j x_j e^{-2pi i jk/n},
/// so that x_j = sum_k X_k e^{+2pi i jk/n}.  n must be a power of two.
cvec forward(const cvec& x);

/// Inverse of forward (no further scaling).
cvec inverse(const cvec& X);

cvec forward_real(const std::vector<double>& x);

/// Inverse transform of a Hermitian spectrum; returns the real part and the
/// largest |imaginary| component seen (for consistency checks).
std::vector<double> inverse_real(const cvec& X, double* max_imag = nullptr);

bool is_power_of_two(std::size_t n);

}  // namespace kdvlab::fft
