#include "kdvlab/invariants.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "kdvlab/errors.hpp"

namespace kdvlab {

namespace {

Profile smoothing_term(const Profile& q, double kappa) {
  // (1/2) e^{-2 kappa |.|} * q  has symbol 2 kappa / (xi^2 + 4 kappa^2)
  return q.apply_multiplier([kappa](double xi) {
    return std::complex<double>(2.0 * kappa / (xi * xi + 4.0 * kappa * kappa), 0.0);
  });
}

Profile reciprocal_half(const Profile& g) {
  std::vector<double> out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!(g.samples()[j] > 0.0))
      throw UsageError("rho: Green's function must be strictly positive");
    out[j] = 0.5 / g.samples()[j];
  }
  return Profile(g.geometry(), g.size(), g.period(), std::move(out));
}

double mean_q(const Profile& q) { return q.coefficient(0).real(); }

}  // namespace

Profile rho_density(const Profile& q, double kappa, const Profile& g) {
  require_same_grid(q, g);
  Profile half_inv = reciprocal_half(g);
  return smoothing_term(q, kappa) - half_inv + kappa;
}

double alpha(const Profile& q, double kappa, AlphaRoute route,
             const SchrodingerSolver& solver) {
  switch (route) {
    case AlphaRoute::Density: {
      SchrodingerSolve s = solver.solve(q, kappa, GreensRoute::Auto);
      return rho_density(q, kappa, s.g).integral();
    }
    case AlphaRoute::Floquet: {
      if (q.geometry() != Geometry::Circle)
        throw UsageError("alpha floquet route requires circle geometry");
      Monodromy mono = solver.monodromy(q, kappa);
      return kappa - mono.gamma + mean_q(q) / (2.0 * kappa);
    }
    case AlphaRoute::Det2: {
      if (q.geometry() != Geometry::Circle)
        throw UsageError("alpha det2 route requires circle geometry");
      const double gamma = solver.floquet_gamma_det(q, kappa);
      return kappa - gamma + mean_q(q) / (2.0 * kappa);
    }
  }
  throw UsageError("alpha: unknown route");
}

InvariantBreakdown invariant_breakdown(const Profile& q, double kappa,
                                       const SchrodingerSolver& solver) {
  SchrodingerSolve s = solver.solve(q, kappa);
  InvariantBreakdown out{.kappa = kappa, .rho = rho_density(q, kappa, s.g)};
  out.alpha_density = out.rho.integral();

  if (q.geometry() == Geometry::Circle) {
    out.alpha_floquet = kappa - s.gamma + mean_q(q) / (2.0 * kappa);
    const double det2 = solver.log_det2(q, kappa);
    const double trace_full = mean_q(q) *
                              (1.0 + std::exp(-kappa)) /
                              (1.0 - std::exp(-kappa)) / (2.0 * kappa);
    const double logdet_matrix = det2 + trace_full;
    const double gamma_det =
        2.0 * std::asinh(std::sinh(0.5 * kappa) * std::exp(0.5 * logdet_matrix));
    out.alpha_det2 = kappa - gamma_det + mean_q(q) / (2.0 * kappa);
    // Hill discriminant identity with the ODE gamma on the right
    const double logdet_closed =
        std::log(std::expm1(s.gamma) * -std::expm1(-s.gamma)) -
        std::log(std::expm1(kappa) * -std::expm1(-kappa));
    out.det_identity_residual = std::abs(logdet_matrix - logdet_closed);
  } else {
    // Transmission coefficient from the log-derivative of psi_+:
    // log a(i kappa) = -int (psi_+'/psi_+ + kappa) dx.
    double log_a = 0.0;
    SchrodingerSolve& sv = s;
    for (std::size_t j = 0; j < q.size(); ++j)
      log_a -= sv.dpsi_plus[j] / sv.psi_plus[j] + kappa;
    log_a *= q.dx();
    out.alpha_floquet = -log_a + q.integral() / (2.0 * kappa);
  }

  double max_diff = 0.0;
  double max_alpha = std::abs(out.alpha_density);
  std::vector<double> routes{out.alpha_density};
  if (out.alpha_floquet) routes.push_back(*out.alpha_floquet);
  if (out.alpha_det2) routes.push_back(*out.alpha_det2);
  for (std::size_t i = 0; i < routes.size(); ++i) {
    max_alpha = std::max(max_alpha, std::abs(routes[i]));
    for (std::size_t j = i + 1; j < routes.size(); ++j)
      max_diff = std::max(max_diff, std::abs(routes[i] - routes[j]));
  }
  out.cross_discrepancy = max_diff / std::max(max_alpha, 1e-5);
  out.hamiltonians = hamiltonians(q, kappa, solver);
  return out;
}

double alpha_gradient_residual(const Profile& q, double kappa, const Profile& f,
                               double eps, const SchrodingerSolver& solver) {
  require_same_grid(q, f);
  const double a_plus = alpha(q + f * eps, kappa, AlphaRoute::Density, solver);
  const double a_minus = alpha(q - f * eps, kappa, AlphaRoute::Density, solver);
  const double fd = (a_plus - a_minus) / (2.0 * eps);

  Profile g = solver.greens_diag(q, kappa);
  Profile grad = (g * -1.0) + 1.0 / (2.0 * kappa);  // delta alpha / delta q
  return std::abs(fd - inner(grad, f));
}

double kappa_derivative_residual(const Profile& q, double kappa, double dkappa,
                                 const SchrodingerSolver& solver) {
  const double a_plus = alpha(q, kappa + dkappa, AlphaRoute::Density, solver);
  const double a_minus = alpha(q, kappa - dkappa, AlphaRoute::Density, solver);
  const double fd = (a_plus - a_minus) / (2.0 * dkappa);

  Profile g = solver.greens_diag(q, kappa);
  const double k3 = 4.0 * kappa * kappa * kappa;
  Profile integrand = g - 1.0 / (2.0 * kappa) + q * (1.0 / k3);
  const double rhs = -2.0 * kappa * integrand.integral();
  return std::abs(fd - rhs);
}

std::vector<EquicontinuityPoint> equicontinuity_profile(
    const Profile& q, const std::vector<double>& kappas,
    const SchrodingerSolver& solver) {
  std::vector<EquicontinuityPoint> out;
  out.reserve(kappas.size());
  for (double k : kappas) {
    EquicontinuityPoint p;
    p.kappa = k;
    p.kappa_alpha = k * alpha(q, k, AlphaRoute::Density, solver);
    double cmp = 0.0;
    const double w = q.spectral_weight();
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double xi = q.frequency(i);
      cmp += w * std::norm(q.spectrum()[i]) / (xi * xi + 4.0 * k * k);
    }
    p.comparison = cmp / k;
    out.push_back(p);
  }
  return out;
}

std::pair<double, double> hs_alpha_integral(const Profile& q, double s,
                                            double kappa0,
                                            const SchrodingerSolver& solver) {
  if (!(s > -1.0 && s < 0.0))
    throw UsageError("hs_alpha_integral: s must lie in (-1, 0)");
  if (kappa0 < 1.0) throw ConfigError("hs_alpha_integral: kappa0 must be >= 1");

  // Gauss-Legendre in log kappa over [kappa0, 64 kappa0], then an analytic
  // kappa^{-3} tail: alpha ~ C kappa^{-3} for smooth q.
  static constexpr std::array<double, 16> nodes = {
      -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
      -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
      -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
      0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
      0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
      0.9894009349916499};
  static constexpr std::array<double, 16> weights = {
      0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
      0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
      0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
      0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
      0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
      0.0271524594117541};

  const double lo = std::log(kappa0);
  const double hi = std::log(64.0 * kappa0);
  const double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
  double lhs = 0.0;
  double alpha_at_max = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double k = std::exp(mid + rad * nodes[i]);
    const double a = alpha(q, k, AlphaRoute::Density, solver);
    lhs += weights[i] * rad * a * std::pow(k, 3.0 + 2.0 * s);
    if (i + 1 == nodes.size()) alpha_at_max = a;
  }
  const double kmax = 64.0 * kappa0;
  const double c_tail = alpha_at_max * kmax * kmax * kmax;
  lhs += c_tail * std::pow(kmax, 2.0 * s) / (-2.0 * s);

  double rhs = 0.0;
  const double w = q.spectral_weight();
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double xi = q.frequency(i);
    rhs += w * std::norm(q.spectrum()[i]) *
           std::pow(xi * xi + 4.0 * kappa0 * kappa0, s);
  }
  return {lhs, rhs};
}

HamiltonianRecord hamiltonians(const Profile& q, double kappa,
                               const SchrodingerSolver& solver) {
  HamiltonianRecord h;
  h.mass = q.integral();
  Profile qp = q.derivative();
  Profile qpp = q.derivative(2);
  h.momentum = 0.5 * inner(q, q);
  h.h_kdv = 0.5 * inner(qp, qp) + integral_product({&q, &q, &q});
  h.h_5th = 0.5 * inner(qpp, qpp) + 5.0 * integral_product({&q, &qp, &qp}) +
            2.5 * integral_product({&q, &q, &q, &q});
  const double a = alpha(q, kappa, AlphaRoute::Density, solver);
  const double k2 = kappa * kappa;
  h.h_kappa = -16.0 * k2 * k2 * kappa * a + 2.0 * k2 * inner(q, q);
  h.h_5th_kappa = 64.0 * std::pow(kappa, 7) * a - 16.0 * k2 * k2 * h.momentum +
                  4.0 * k2 * h.h_kdv;
  return h;
}

}  // namespace kdvlab
