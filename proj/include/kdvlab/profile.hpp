#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

namespace kdvlab {

enum class Geometry { Circle, Line };

/// A real wave profile on a uniform grid, either on the circle R/Z (period 1,
/// samples at x_j = j/n) or on a line box [-L, L) realized as a 2L-periodic
/// box (samples at x_j = -L + 2L j/n).  Samples are authoritative; the
/// spectrum is computed on construction so a Profile is an immutable value.
///
/// Fourier conventions follow the two geometries: on the circle the stored
/// coefficients c_k *are* the Fourier coefficients q^(xi) at xi = 2 pi k; on
/// the line the transform carries a 1/sqrt(2pi) and a continuum measure, which
/// enters norms and tail masses through the spectral weight 2L per mode.
class Profile {
 public:
  Profile(Geometry geometry, std::size_t n, double length,
          std::vector<double> samples);

  static Profile zeros(Geometry geometry, std::size_t n, double length);
  static Profile from_spectrum(Geometry geometry, std::size_t n, double length,
                               const std::vector<std::complex<double>>& coef);
  static Profile from_function(Geometry geometry, std::size_t n, double length,
                               const std::function<double(double)>& f);

  Geometry geometry() const { return geometry_; }
  std::size_t size() const { return n_; }
  /// Spatial period: 1 on the circle, 2L on the line.
  double period() const { return period_; }
  /// Box half-width L (line geometry only).
  double box_half_width() const;
  double dx() const { return period_ / static_cast<double>(n_); }
  double left() const;
  double x(std::size_t j) const { return left() + dx() * static_cast<double>(j); }

  const std::vector<double>& samples() const { return samples_; }
  const std::vector<std::complex<double>>& spectrum() const { return spectrum_; }

  /// Circle frequency xi_k (2 pi k / period, FFT storage order, xi = 0 first).
  double frequency(std::size_t k) const;
  /// Fourier coefficient at integer mode index m (xi = 2 pi m / period); zero
  /// beyond the represented band.
  std::complex<double> coefficient(std::int64_t mode) const;

  /// Measure weight turning sum |c_k|^2 into the geometry's Parseval sum:
  /// 1 on the circle, 2L on the line.
  double spectral_weight() const;

  /// Squared Sobolev norm  sum w |c_k|^2 (4 kappa^2 + xi^2)^s.
  double sobolev_sq(double s, double kappa = 1.0) const;
  double sobolev_norm(double s, double kappa = 1.0) const;
  /// Frequency-tail mass  sum_{|xi| >= cutoff} w |c_k|^2 (xi^2 + 4)^s.
  double tail_mass(double s, double cutoff) const;

  /// Grid quadrature of q (trapezoid = spectral for periodic data).
  double integral() const;
  /// Grid quadrature of q^2.
  double l2_sq_grid() const;
  double max_abs() const;

  Profile derivative(int order = 1) const;
  Profile apply_multiplier(
      const std::function<std::complex<double>(double)>& symbol) const;

  /// Hermitian-symmetry defect of the spectrum, relative to max |c_k|.
  double hermitian_defect() const;
  /// Max |q| over the outermost 5% of grid points on each side (line only).
  double boundary_magnitude() const;
  bool decays(double boundary_tol = 1e-10) const;

  /// Cyclic shift by an integer number of grid points: result(x) = q(x + h)
  /// with h = shift * dx.
  Profile shifted(std::int64_t shift) const;

  /// Spectral resampling to a finer/coarser power-of-two grid.
  Profile resampled(std::size_t new_n) const;

  Profile operator+(const Profile& other) const;
  Profile operator-(const Profile& other) const;
  Profile operator*(double c) const;
  Profile operator+(double c) const;
  Profile operator-(double c) const { return *this + (-c); }

 private:
  Geometry geometry_;
  std::size_t n_;
  double period_;
  std::vector<double> samples_;
  std::vector<std::complex<double>> spectrum_;
};

Profile operator*(double c, const Profile& p);

/// Exact (dealiased) pointwise product: both factors are evaluated on a 2n
/// grid, multiplied there, and the result projected back to the n-band.
Profile dealiased_product(const Profile& a, const Profile& b);

/// Exact product of up to four band-limited factors via a 4n working grid.
Profile dealiased_product(std::initializer_list<const Profile*> factors);

/// L2 pairing  int a(x) b(x) dx  evaluated spectrally (exact for the stored
/// bands).
double inner(const Profile& a, const Profile& b);

/// int a*b*c dx and int a*b*c*d dx, alias-free via a 4x oversampled grid.
double integral_product(std::initializer_list<const Profile*> factors);

void require_same_grid(const Profile& a, const Profile& b);

/// Seeded band-limited random profile: modes 1..band with amplitude decay
/// (1+|xi|)^{-decay_exponent} and uniform random phases, scaled so that
/// ||q||_{H^{-1}} equals target exactly.  Deterministic across platforms.
Profile seeded_profile(std::uint64_t seed, Geometry geometry, std::size_t n,
                       double length, double target_h_minus1_norm,
                       double decay_exponent = 4.0, std::size_t band = 0);

}  // namespace kdvlab
