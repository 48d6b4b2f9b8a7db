#include "kdvlab/profile.hpp"

#include <algorithm>
#include <cmath>

#include "kdvlab/errors.hpp"
#include "kdvlab/fourier.hpp"

namespace kdvlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void validate_grid(Geometry geometry, std::size_t n, double length) {
  if (!fft::is_power_of_two(n))
    throw ConfigError("profile: grid size must be a power of two, got " +
                      std::to_string(n));
  if (!(length > 0.0)) throw ConfigError("profile: length must be positive");
  if (geometry == Geometry::Circle && length != 1.0)
    throw ConfigError("profile: circle period is fixed at 1");
}

std::int64_t signed_index(std::size_t k, std::size_t n) {
  return k < n / 2 ? static_cast<std::int64_t>(k)
                   : static_cast<std::int64_t>(k) - static_cast<std::int64_t>(n);
}

// Multipliers amplify spectral roundoff (xi^3 and worse); pin the exact
// Hermitian symmetry so realness survives by construction.
void hermitize(std::vector<std::complex<double>>& c) {
  const std::size_t n = c.size();
  c[0] = std::complex<double>(c[0].real(), 0.0);
  c[n / 2] = std::complex<double>(c[n / 2].real(), 0.0);
  for (std::size_t k = 1; k < n / 2; ++k) {
    const std::complex<double> avg = 0.5 * (c[k] + std::conj(c[n - k]));
    c[k] = avg;
    c[n - k] = std::conj(avg);
  }
}

// Zero-pad (or truncate) a spectrum in FFT storage order to size m.  The
// Nyquist bin is split/folded so realness is preserved.
fft::cvec respaced_spectrum(const fft::cvec& c, std::size_t m) {
  const std::size_t n = c.size();
  fft::cvec out(m, 0.0);
  if (m >= n) {
    for (std::size_t k = 0; k < n / 2; ++k) out[k] = c[k];
    for (std::size_t k = n / 2 + 1; k < n; ++k) out[m - (n - k)] = c[k];
    if (m == n) {
      out[n / 2] = c[n / 2];
    } else {
      out[n / 2] = 0.5 * c[n / 2];
      out[m - n / 2] = 0.5 * c[n / 2];
    }
  } else {
    for (std::size_t k = 0; k < m / 2; ++k) out[k] = c[k];
    for (std::size_t k = m / 2 + 1; k < m; ++k) out[k] = c[n - (m - k)];
    out[m / 2] = c[m / 2] + c[n - m / 2];  // fold; real for real data
  }
  return out;
}

}  // namespace

Profile::Profile(Geometry geometry, std::size_t n, double length,
                 std::vector<double> samples)
    : geometry_(geometry), n_(n), period_(length), samples_(std::move(samples)) {
  validate_grid(geometry, n, length);
  if (samples_.size() != n_)
    throw ConfigError("profile: sample count does not match grid size");
  spectrum_ = fft::forward_real(samples_);
}

Profile Profile::zeros(Geometry geometry, std::size_t n, double length) {
  return Profile(geometry, n, length, std::vector<double>(n, 0.0));
}

Profile Profile::from_spectrum(Geometry geometry, std::size_t n, double length,
                               const std::vector<std::complex<double>>& coef) {
  validate_grid(geometry, n, length);
  if (coef.size() != n)
    throw ConfigError("profile: spectrum size does not match grid size");
  double max_imag = 0.0;
  std::vector<double> samples = fft::inverse_real(coef, &max_imag);
  double scale = 0.0;
  for (double v : samples) scale = std::max(scale, std::abs(v));
  if (max_imag > 1e-10 * std::max(scale, 1.0))
    throw AccuracyError("profile: spectrum is not Hermitian-symmetric");
  return Profile(geometry, n, length, std::move(samples));
}

Profile Profile::from_function(Geometry geometry, std::size_t n, double length,
                               const std::function<double(double)>& f) {
  validate_grid(geometry, n, length);
  std::vector<double> samples(n);
  const double h = length / static_cast<double>(n);
  const double x0 = geometry == Geometry::Circle ? 0.0 : -0.5 * length;
  for (std::size_t j = 0; j < n; ++j) samples[j] = f(x0 + h * static_cast<double>(j));
  return Profile(geometry, n, length, std::move(samples));
}

double Profile::box_half_width() const {
  if (geometry_ != Geometry::Line)
    throw UsageError("box_half_width: circle profiles have no box");
  return 0.5 * period_;
}

double Profile::left() const {
  return geometry_ == Geometry::Circle ? 0.0 : -0.5 * period_;
}

double Profile::frequency(std::size_t k) const {
  return kTwoPi * static_cast<double>(signed_index(k, n_)) / period_;
}

std::complex<double> Profile::coefficient(std::int64_t mode) const {
  const auto half = static_cast<std::int64_t>(n_ / 2);
  if (mode >= half || mode < -half) return {0.0, 0.0};
  const std::size_t k =
      mode >= 0 ? static_cast<std::size_t>(mode)
                : n_ - static_cast<std::size_t>(-mode);
  return spectrum_[k];
}

double Profile::spectral_weight() const {
  return geometry_ == Geometry::Circle ? 1.0 : period_;
}

double Profile::sobolev_sq(double s, double kappa) const {
  const double w = spectral_weight();
  double sum = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    const double xi = frequency(k);
    sum += w * std::norm(spectrum_[k]) * std::pow(4.0 * kappa * kappa + xi * xi, s);
  }
  return sum;
}

double Profile::sobolev_norm(double s, double kappa) const {
  return std::sqrt(sobolev_sq(s, kappa));
}

double Profile::tail_mass(double s, double cutoff) const {
  const double w = spectral_weight();
  double sum = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    const double xi = frequency(k);
    if (std::abs(xi) < cutoff) continue;
    sum += w * std::norm(spectrum_[k]) * std::pow(xi * xi + 4.0, s);
  }
  return sum;
}

double Profile::integral() const { return spectrum_[0].real() * period_; }

double Profile::l2_sq_grid() const {
  double sum = 0.0;
  for (double v : samples_) sum += v * v;
  return sum * dx();
}

double Profile::max_abs() const {
  double m = 0.0;
  for (double v : samples_) m = std::max(m, std::abs(v));
  return m;
}

Profile Profile::derivative(int order) const {
  fft::cvec out(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    std::complex<double> m = std::pow(std::complex<double>(0.0, frequency(k)),
                                      order);
    out[k] = spectrum_[k] * m;
  }
  if (order % 2 != 0) out[n_ / 2] = 0.0;  // odd derivative has no real Nyquist
  hermitize(out);
  return from_spectrum(geometry_, n_, period_, out);
}

Profile Profile::apply_multiplier(
    const std::function<std::complex<double>(double)>& symbol) const {
  fft::cvec out(n_);
  for (std::size_t k = 0; k < n_; ++k) out[k] = spectrum_[k] * symbol(frequency(k));
  hermitize(out);
  return from_spectrum(geometry_, n_, period_, out);
}

double Profile::hermitian_defect() const {
  double scale = 0.0;
  for (const auto& c : spectrum_) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return 0.0;
  double defect = std::abs(spectrum_[0].imag());
  for (std::size_t k = 1; k < n_; ++k)
    defect = std::max(defect, std::abs(spectrum_[k] - std::conj(spectrum_[n_ - k])));
  return defect / scale;
}

double Profile::boundary_magnitude() const {
  if (geometry_ != Geometry::Line)
    throw UsageError("boundary_magnitude is a line-geometry guard");
  const std::size_t edge = std::max<std::size_t>(1, n_ / 20);
  double m = 0.0;
  for (std::size_t j = 0; j < edge; ++j) {
    m = std::max(m, std::abs(samples_[j]));
    m = std::max(m, std::abs(samples_[n_ - 1 - j]));
  }
  return m;
}

bool Profile::decays(double boundary_tol) const {
  return boundary_magnitude() < boundary_tol;
}

Profile Profile::shifted(std::int64_t shift) const {
  std::vector<double> out(n_);
  const auto n = static_cast<std::int64_t>(n_);
  for (std::int64_t j = 0; j < n; ++j)
    out[static_cast<std::size_t>(j)] =
        samples_[static_cast<std::size_t>(((j + shift) % n + n) % n)];
  return Profile(geometry_, n_, period_, std::move(out));
}

Profile Profile::resampled(std::size_t new_n) const {
  if (new_n == n_) return *this;
  if (!fft::is_power_of_two(new_n))
    throw ConfigError("resampled: target grid must be a power of two");
  return from_spectrum(geometry_, new_n, period_,
                       respaced_spectrum(spectrum_, new_n));
}

Profile Profile::operator+(const Profile& other) const {
  require_same_grid(*this, other);
  std::vector<double> out(n_);
  for (std::size_t j = 0; j < n_; ++j) out[j] = samples_[j] + other.samples_[j];
  return Profile(geometry_, n_, period_, std::move(out));
}

Profile Profile::operator-(const Profile& other) const {
  require_same_grid(*this, other);
  std::vector<double> out(n_);
  for (std::size_t j = 0; j < n_; ++j) out[j] = samples_[j] - other.samples_[j];
  return Profile(geometry_, n_, period_, std::move(out));
}

Profile Profile::operator*(double c) const {
  std::vector<double> out(n_);
  for (std::size_t j = 0; j < n_; ++j) out[j] = c * samples_[j];
  return Profile(geometry_, n_, period_, std::move(out));
}

Profile Profile::operator+(double c) const {
  std::vector<double> out(n_);
  for (std::size_t j = 0; j < n_; ++j) out[j] = samples_[j] + c;
  return Profile(geometry_, n_, period_, std::move(out));
}

Profile operator*(double c, const Profile& p) { return p * c; }

void require_same_grid(const Profile& a, const Profile& b) {
  if (a.geometry() != b.geometry() || a.size() != b.size() ||
      a.period() != b.period())
    throw UsageError("profiles live on different grids");
}

Profile dealiased_product(const Profile& a, const Profile& b) {
  return dealiased_product({&a, &b});
}

Profile dealiased_product(std::initializer_list<const Profile*> factors) {
  if (factors.size() == 0) throw UsageError("dealiased_product: no factors");
  const Profile* first = *factors.begin();
  const std::size_t n = first->size();
  const std::size_t big = factors.size() <= 2 ? 2 * n : 4 * n;
  std::vector<double> prod(big, 1.0);
  for (const Profile* f : factors) {
    require_same_grid(*first, *f);
    Profile up = f->resampled(big);
    const auto& s = up.samples();
    for (std::size_t j = 0; j < big; ++j) prod[j] *= s[j];
  }
  Profile on_big(first->geometry(), big, first->period(), std::move(prod));
  return on_big.resampled(n);
}

double inner(const Profile& a, const Profile& b) {
  require_same_grid(a, b);
  std::complex<double> sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    sum += a.spectrum()[k] * std::conj(b.spectrum()[k]);
  return sum.real() * a.period();
}

double integral_product(std::initializer_list<const Profile*> factors) {
  if (factors.size() == 0) throw UsageError("integral_product: no factors");
  const Profile* first = *factors.begin();
  const std::size_t big = 4 * first->size();
  std::vector<double> prod(big, 1.0);
  for (const Profile* f : factors) {
    require_same_grid(*first, *f);
    Profile up = f->resampled(big);
    const auto& s = up.samples();
    for (std::size_t j = 0; j < big; ++j) prod[j] *= s[j];
  }
  double sum = 0.0;
  for (double v : prod) sum += v;
  return sum * first->period() / static_cast<double>(big);
}

Profile seeded_profile(std::uint64_t seed, Geometry geometry, std::size_t n,
                       double length, double target_h_minus1_norm,
                       double decay_exponent, std::size_t band) {
  validate_grid(geometry, n, length);
  if (band == 0) band = n / 8;
  if (band >= n / 2) throw ConfigError("seeded_profile: band exceeds Nyquist");
  if (target_h_minus1_norm < 0.0)
    throw ConfigError("seeded_profile: negative target norm");

  // splitmix64 stream; avoids implementation-defined std distributions so the
  // same seed yields byte-identical profiles everywhere.
  auto next = [state = seed]() mutable {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  auto uniform = [&next]() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  };

  fft::cvec coef(n, 0.0);
  for (std::size_t k = 1; k <= band; ++k) {
    const double xi = kTwoPi * static_cast<double>(k) / length;
    const double amp = std::pow(1.0 + std::abs(xi), -decay_exponent);
    const double phase = kTwoPi * uniform();
    coef[k] = std::polar(amp, phase);
    coef[n - k] = std::conj(coef[k]);
  }
  Profile raw = Profile::from_spectrum(geometry, n, length, coef);
  if (target_h_minus1_norm == 0.0) return raw * 0.0;
  const double norm = raw.sobolev_norm(-1.0, 1.0);
  if (norm == 0.0)
    throw ConfigError("seeded_profile: target norm unreachable on this grid");
  return raw * (target_h_minus1_norm / norm);
}

}  // namespace kdvlab
