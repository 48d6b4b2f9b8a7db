#pragma once

#include <optional>
#include <vector>

#include "kdvlab/profile.hpp"
#include "kdvlab/schrodinger.hpp"

namespace kdvlab {

enum class AlphaRoute { Density, Floquet, Det2 };

struct HamiltonianRecord {
  double mass = 0.0;       // int q
  double momentum = 0.0;   // P = int q^2 / 2
  double h_kdv = 0.0;      // int q'^2/2 + q^3
  double h_kappa = 0.0;    // -16 k^5 alpha + 2 k^2 int q^2
  double h_5th = 0.0;      // int q''^2/2 + 5 q q'^2 + 5/2 q^4
  double h_5th_kappa = 0.0;  // 64 k^7 alpha - 16 k^4 P + 4 k^2 H_KdV
};

struct InvariantBreakdown {
  double kappa = 0.0;
  Profile rho;
  double alpha_density = 0.0;
  /// Circle: kappa - gamma + q^(0)/(2 kappa) with gamma from the monodromy.
  /// Line: the transmission-coefficient route from the log-derivative of
  /// psi_+ (the same Weyl machinery realizes both).
  std::optional<double> alpha_floquet;
  /// Circle only: gamma recovered from the renormalized determinant of the
  /// truncated Fourier matrix.
  std::optional<double> alpha_det2;
  /// Residual of the Hill-discriminant identity: matrix log-det vs the
  /// closed form evaluated with the ODE gamma.
  std::optional<double> det_identity_residual;
  double cross_discrepancy = 0.0;
  HamiltonianRecord hamiltonians;
};

/// Conserved density rho = kappa - 1/(2g) + (1/2) e^{-2 kappa |.|} * q.
Profile rho_density(const Profile& q, double kappa, const Profile& g);

double alpha(const Profile& q, double kappa, AlphaRoute route,
             const SchrodingerSolver& solver);

InvariantBreakdown invariant_breakdown(const Profile& q, double kappa,
                                       const SchrodingerSolver& solver);

/// | (alpha(q+eps f) - alpha(q-eps f)) / (2 eps) - int (1/(2 kappa) - g) f |.
double alpha_gradient_residual(const Profile& q, double kappa, const Profile& f,
                               double eps, const SchrodingerSolver& solver);

/// | d alpha / d kappa (central difference) + 2 kappa int g - 1/(2k) + q/(4k^3) |.
double kappa_derivative_residual(const Profile& q, double kappa, double dkappa,
                                 const SchrodingerSolver& solver);

struct EquicontinuityPoint {
  double kappa = 0.0;
  double kappa_alpha = 0.0;  // kappa * alpha(kappa; q)
  double comparison = 0.0;   // (1/kappa) sum |q^|^2 / (xi^2 + 4 kappa^2)
};

std::vector<EquicontinuityPoint> equicontinuity_profile(
    const Profile& q, const std::vector<double>& kappas,
    const SchrodingerSolver& solver);

/// Both sides of the integrated-invariant comparison for s in (-1, 0):
/// int_{kappa0}^inf alpha(kappa) kappa^{2+2s} d kappa  vs
/// int |q^(xi)|^2 (xi^2 + 4 kappa0^2)^s d xi.
std::pair<double, double> hs_alpha_integral(const Profile& q, double s,
                                            double kappa0,
                                            const SchrodingerSolver& solver);

HamiltonianRecord hamiltonians(const Profile& q, double kappa,
                               const SchrodingerSolver& solver);

}  // namespace kdvlab
