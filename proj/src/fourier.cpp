#include "kdvlab/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

#include "kdvlab/errors.hpp"

namespace kdvlab::fft {

namespace {

// Plans are created with FFTW_UNALIGNED so they can execute on any buffer of
// the right size via fftw_execute_dft.  The cache is guarded; execution on
// distinct buffers is thread-safe.
class PlanCache {
 public:
  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> buf(n);
    fftw_plan p = fftw_plan_dft_1d(
        static_cast<int>(n), reinterpret_cast<fftw_complex*>(buf.data()),
        reinterpret_cast<fftw_complex*>(buf.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void execute(std::size_t n, int sign, std::complex<double>* data) {
  fftw_plan p = cache().get(n, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

cvec forward(const cvec& x) {
  if (!is_power_of_two(x.size()))
    throw ConfigError("fft: grid size must be a power of two, got " +
                      std::to_string(x.size()));
  cvec X = x;
  execute(X.size(), FFTW_FORWARD, X.data());
  const double inv_n = 1.0 / static_cast<double>(X.size());
  for (auto& c : X) c *= inv_n;
  return X;
}

cvec inverse(const cvec& X) {
  if (!is_power_of_two(X.size()))
    throw ConfigError("fft: grid size must be a power of two, got " +
                      std::to_string(X.size()));
  cvec x = X;
  execute(x.size(), FFTW_BACKWARD, x.data());
  return x;
}

cvec forward_real(const std::vector<double>& x) {
  cvec buf(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) buf[j] = x[j];
  return forward(buf);
}

std::vector<double> inverse_real(const cvec& X, double* max_imag) {
  cvec x = inverse(X);
  std::vector<double> out(x.size());
  double mi = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = x[j].real();
    mi = std::max(mi, std::abs(x[j].imag()));
  }
  if (max_imag) *max_imag = mi;
  return out;
}

}  // namespace kdvlab::fft
