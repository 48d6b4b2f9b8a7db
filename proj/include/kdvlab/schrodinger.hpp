#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "kdvlab/profile.hpp"

namespace kdvlab {

enum class GreensRoute { Weyl, Resolvent, Auto };

struct SolverOptions {
  /// Monodromy step refinement stops when successive gamma values differ by
  /// less than this; the returned gamma is Richardson-extrapolated.
  double gamma_tol = 1e-12;
  std::size_t min_steps = 512;
  std::size_t max_steps = std::size_t{1} << 22;
  /// Pointwise Wronskian drift beyond this raises AccuracyError.
  double wronskian_hard_tol = 1e-6;
  /// Advisory smallness threshold delta for kappa^{-1/2} ||q||_{H^-1}.
  double delta_admiss = 0.1;
  /// greens_diag_checked: Weyl vs resolvent disagreement beyond this raises.
  double route_cross_tol = 1e-5;
  /// GreensRoute::Auto switches to the matrix route above this kappa (circle).
  double auto_resolvent_kappa = 12.0;
};

/// Period map of (psi, psi')' = (psi', (q + kappa^2) psi) over one period.
struct Monodromy {
  std::array<std::array<double, 2>, 2> m;
  double trace() const { return m[0][0] + m[1][1]; }
  double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
  double gamma = 0.0;        // arccosh(trace/2), Richardson-extrapolated
  std::size_t steps = 0;     // steps used at the finest level
};

struct AdmissibilityVerdict {
  bool ok = false;
  double kappa_scaled_norm = 0.0;
  bool norm_ok = false;
  bool g_range_ok = false;
  std::string message;
};

/// One (q, kappa) solve: Weyl solutions on the sample grid and the diagonal
/// Green's function g = psi_+ psi_-.  Circle solves carry Floquet data.
struct SchrodingerSolve {
  double kappa = 0.0;
  GreensRoute route = GreensRoute::Weyl;
  Profile g;
  std::vector<double> psi_plus, dpsi_plus, psi_minus, dpsi_minus;
  double gamma = 0.0;          // circle only
  Monodromy monodromy;         // circle only
  bool has_floquet = false;
  double wronskian_defect = 0.0;
};

/// Weyl solutions on the fine integration grid (M+1 nodes across the period),
/// for quadratures that need resolution beyond the sample grid.
struct WeylFine {
  std::vector<double> psi_plus, psi_minus;
  std::vector<double> dpsi_plus, dpsi_minus;
  double gamma = 0.0;
  std::size_t steps = 0;
  double h = 0.0;
};

class SchrodingerSolver {
 public:
  explicit SchrodingerSolver(SolverOptions opt = {}) : opt_(opt) {}

  Monodromy monodromy(const Profile& q, double kappa) const;

  SchrodingerSolve solve(const Profile& q, double kappa,
                         GreensRoute route = GreensRoute::Weyl) const;

  /// Floquet solve over one period of the box, regardless of geometry.  For a
  /// decaying line profile this matches the shooting solve up to e^{-2kL};
  /// it remains the exact invariant structure of the periodized dynamics when
  /// the profile has wrapped around the box.
  SchrodingerSolve solve_periodic_box(const Profile& q, double kappa) const;

  Profile greens_diag(const Profile& q, double kappa,
                      GreensRoute route = GreensRoute::Weyl) const;

  /// Computes both routes and verifies agreement; returns the Weyl result.
  Profile greens_diag_checked(const Profile& q, double kappa,
                              double* max_rel_diff = nullptr) const;

  /// Diagonal of the resolvent of -d^2/dx^2 + q on L^2(R/Z) with periodic
  /// boundary conditions, from the (2m+1)-dimensional truncated Fourier
  /// matrix.  The free part of the diagonal is summed in closed form.
  Profile periodic_resolvent_diag(const Profile& q, double kappa,
                                  std::size_t m = 0) const;

  /// Raw truncated diagonal sum at x (no free-part correction); converges to
  /// the true value only as m -> infinity.
  double periodic_resolvent_diag_raw(const Profile& q, double kappa,
                                     std::size_t m, double x) const;

  /// Renormalized log-determinant log det_2(1 + sqrtR0 q sqrtR0) of the
  /// truncated matrix, with an analytic second-order tail correction.
  double log_det2(const Profile& q, double kappa, std::size_t m = 0) const;

  /// Floquet exponent recovered from the matrix determinant alone via
  /// 4 sinh^2(gamma/2) = det(1+A) * 4 sinh^2(kappa/2); no ODE involved.
  double floquet_gamma_det(const Profile& q, double kappa,
                           std::size_t m = 0) const;

  WeylFine weyl_fine(const Profile& q, double kappa) const;

  AdmissibilityVerdict admissibility(const Profile& q, double kappa,
                                     const SchrodingerSolve* s = nullptr) const;

  const SolverOptions& options() const { return opt_; }

 private:
  SchrodingerSolve solve_impl(const Profile& q, double kappa, GreensRoute route,
                              bool force_floquet) const;
  std::size_t refined_steps(const Profile& q, double kappa,
                            double* gamma_out) const;

  SolverOptions opt_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::array<std::uint64_t, 4>, std::size_t> step_cache_;
};

/// Relative L2 residual of g''' = 2(qg)' + 2qg' + 4 kappa^2 g'.
double elliptic_residual(const SchrodingerSolve& s, const Profile& q);

/// Relative defect of int G(x,y)G(y,x) / (2 g(y)^2) dy = g(x), max over a
/// sample of x.  Line geometry; quadrature split at the kernel kink.
double greens_kernel_identity_residual(const Profile& q, double kappa,
                                       const SchrodingerSolver& solver);

/// Circle analogue via geometric summation over periods (ratio e^{-2 gamma}).
double greens_kernel_identity_residual_circle(const Profile& q, double kappa,
                                              const SchrodingerSolver& solver);

}  // namespace kdvlab
