#include <doctest.h>

#include <array>
#include <cmath>

#include "kdvlab/errors.hpp"
#include "kdvlab/profile.hpp"
#include "kdvlab/schrodinger.hpp"

using namespace kdvlab;

namespace {
constexpr double kPi = 3.14159265358979323846;

Profile constant(double c, std::size_t n = 128) {
  return Profile::zeros(Geometry::Circle, n, 1.0) + c;
}

// Test-local oracle: fixed-step RK4 over one period with q evaluated
// analytically, independent of the library's sampled-q machinery.
std::array<double, 3> monodromy_oracle(const std::function<double(double)>& q,
                                       double kappa, int steps) {
  std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};  // columns (psi, psi')
  const double h = 1.0 / steps;
  auto rhs = [&](double x, const std::array<double, 4>& y) {
    const double w = q(x) + kappa * kappa;
    return std::array<double, 4>{y[1], w * y[0], y[3], w * y[2]};
  };
  auto axpy = [](const std::array<double, 4>& y, double a,
                 const std::array<double, 4>& k) {
    return std::array<double, 4>{y[0] + a * k[0], y[1] + a * k[1],
                                 y[2] + a * k[2], y[3] + a * k[3]};
  };
  for (int s = 0; s < steps; ++s) {
    const double x = s * h;
    auto k1 = rhs(x, m);
    auto k2 = rhs(x + 0.5 * h, axpy(m, 0.5 * h, k1));
    auto k3 = rhs(x + 0.5 * h, axpy(m, 0.5 * h, k2));
    auto k4 = rhs(x + h, axpy(m, h, k3));
    for (int i = 0; i < 4; ++i)
      m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  const double tr = m[0] + m[3];
  const double det = m[0] * m[3] - m[1] * m[2];
  return {tr, det, std::acosh(0.5 * tr)};
}
}  // namespace

TEST_CASE("free monodromy: trace 2cosh(kappa), gamma = kappa") {
  SchrodingerSolver solver;
  Monodromy mono = solver.monodromy(constant(0.0), 1.0);
  CHECK(mono.trace() == doctest::Approx(2.0 * std::cosh(1.0)).epsilon(1e-11));
  CHECK(mono.gamma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mono.det() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("constant potential: gamma = sqrt(kappa^2 + c)") {
  SchrodingerSolver solver;
  Monodromy mono = solver.monodromy(constant(0.25), 1.0);
  CHECK(mono.gamma == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
}

TEST_CASE("monodromy matches an independent analytic-q integration") {
  SchrodingerSolver solver;
  Profile q = Profile::from_function(Geometry::Circle, 128, 1.0, [](double x) {
    return 0.1 * std::cos(2.0 * kPi * x) + 0.03 * std::sin(4.0 * kPi * x);
  });
  Monodromy mono = solver.monodromy(q, 2.0);
  auto oracle = monodromy_oracle(
      [](double x) {
        return 0.1 * std::cos(2.0 * kPi * x) + 0.03 * std::sin(4.0 * kPi * x);
      },
      2.0, 1 << 17);
  CHECK(mono.gamma == doctest::Approx(oracle[2]).epsilon(1e-10));
  CHECK(mono.det() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("monodromy det stays on the Wronskian for a seeded profile") {
  SchrodingerSolver solver;
  Profile q = seeded_profile(2, Geometry::Circle, 128, 1.0, 0.08);
  Monodromy mono = solver.monodromy(q, 1.0);
  CHECK(std::abs(mono.det() - 1.0) < 1e-10);
}

TEST_CASE("energy inside the spectrum raises SpectrumIntersectionError") {
  SchrodingerSolver solver;
  // q = -2 puts the spectrum bottom at -2 < -kappa^2 = -1
  CHECK_THROWS_AS(solver.monodromy(constant(-2.0), 1.0),
                  SpectrumIntersectionError);
}

TEST_CASE("free Weyl solutions on the circle") {
  SchrodingerSolver solver;
  SchrodingerSolve s = solver.solve(constant(0.0, 64), 1.0);
  CHECK(s.gamma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.wronskian_defect < 1e-10);
  // psi_+- = e^{-+x}/sqrt(2) up to a common positive factor; the product is
  // fixed: g == 1/2
  for (double gv : s.g.samples())
    CHECK(gv == doctest::Approx(0.5).epsilon(1e-12));
  const double ratio = s.psi_plus[1] / s.psi_plus[0];
  CHECK(ratio == doctest::Approx(std::exp(-s.g.dx())).epsilon(1e-10));
}

TEST_CASE("free line solve gives g = 1/(2 kappa)") {
  SchrodingerSolver solver;
  for (double kappa : {1.0, 2.0}) {
    Profile q = Profile::zeros(Geometry::Line, 128, 20.0);
    SchrodingerSolve s = solver.solve(q, kappa);
    for (double gv : s.g.samples())
      CHECK(gv == doctest::Approx(0.5 / kappa).epsilon(1e-11));
    CHECK(s.wronskian_defect < 1e-10);
  }
}

TEST_CASE("shallow well on the line: positive Weyl pair, unit Wronskian") {
  Profile q = Profile::from_function(Geometry::Line, 256, 24.0, [](double x) {
    const double c = std::cosh(x / std::sqrt(2.0));
    return -0.1 / (c * c);
  });
  SchrodingerSolver solver;
  SchrodingerSolve s = solver.solve(q, 1.0);
  for (std::size_t j = 0; j < q.size(); ++j) {
    CHECK(s.psi_plus[j] > 0.0);
    CHECK(s.psi_minus[j] > 0.0);
  }
  CHECK(s.wronskian_defect < 1e-8);
}

TEST_CASE("deep well intersects the spectrum on the line") {
  Profile q = Profile::from_function(Geometry::Line, 256, 24.0, [](double x) {
    const double c = std::cosh(x);
    return -8.0 / (c * c);
  });
  SchrodingerSolver solver;
  CHECK_THROWS_AS(solver.solve(q, 1.0), SpectrumIntersectionError);
}

TEST_CASE("constant potential g by both routes; dense-matrix oracle") {
  SchrodingerSolver solver;
  Profile q = constant(0.25);
  const double expect = 0.5 / std::sqrt(1.25);
  Profile gw = solver.greens_diag(q, 1.0, GreensRoute::Weyl);
  Profile gr = solver.greens_diag(q, 1.0, GreensRoute::Resolvent);
  for (std::size_t j = 0; j < q.size(); ++j) {
    CHECK(gw.samples()[j] == doctest::Approx(expect).epsilon(1e-11));
    CHECK(gr.samples()[j] == doctest::Approx(expect).epsilon(1e-11));
  }
}

TEST_CASE("perturbative g for a small single mode") {
  SchrodingerSolver solver;
  const double eps = 1e-3;
  Profile q = Profile::from_function(Geometry::Circle, 128, 1.0, [eps](double x) {
    return eps * std::cos(2.0 * kPi * x);
  });
  Profile g = solver.greens_diag(q, 1.0);
  const double denom = 4.0 * kPi * kPi + 4.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double expect = 0.5 - eps * std::cos(2.0 * kPi * g.x(j)) / denom;
    CHECK(g.samples()[j] == doctest::Approx(expect).epsilon(3e-6));
  }
}

TEST_CASE("route agreement on seeded admissible profiles") {
  SchrodingerSolver solver;
  for (std::uint64_t seed : {1ull, 2ull}) {
    Profile q = seeded_profile(seed, Geometry::Circle, 128, 1.0, 0.08);
    for (double kappa : {1.0, 2.0, 4.0}) {
      double rel = 0.0;
      solver.greens_diag_checked(q, kappa, &rel);
      CHECK(rel < 1e-7);
    }
  }
}

TEST_CASE("raw truncated resolvent diagonal approaches the closed form") {
  SchrodingerSolver solver;
  Profile q = Profile::zeros(Geometry::Circle, 64, 1.0);
  const double limit = (1.0 + std::exp(-1.0)) / (2.0 * (1.0 - std::exp(-1.0)));
  double prev_err = 1e9;
  for (std::size_t m : {8u, 32u, 128u}) {
    const double raw = solver.periodic_resolvent_diag_raw(q, 1.0, m, 0.3);
    const double err = std::abs(raw - limit);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 2e-3);
  // the corrected version hits the closed form immediately
  Profile d = solver.periodic_resolvent_diag(q, 1.0);
  for (double v : d.samples()) CHECK(v == doctest::Approx(limit).epsilon(1e-12));
  // constant shift: kappa^2 -> kappa^2 + c
  Profile qc = constant(0.25, 64);
  const double keff = std::sqrt(1.25);
  const double limc = (1.0 + std::exp(-keff)) / (2.0 * keff * (1.0 - std::exp(-keff)));
  Profile dc = solver.periodic_resolvent_diag(qc, 1.0);
  for (double v : dc.samples()) CHECK(v == doctest::Approx(limc).epsilon(1e-10));
}

TEST_CASE("admissibility verdicts") {
  SchrodingerSolver solver;
  Profile zero = Profile::zeros(Geometry::Circle, 64, 1.0);
  CHECK(solver.admissibility(zero, 1.0).ok);

  Profile big = constant(2.0, 64);  // ||q||_{H^-1} = 1
  AdmissibilityVerdict v = solver.admissibility(big, 1.0);
  CHECK(v.kappa_scaled_norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(v.ok);

  Profile small = Profile::from_function(Geometry::Circle, 64, 1.0, [](double x) {
    return 0.05 * std::cos(2.0 * kPi * x);
  });
  AdmissibilityVerdict v2 = solver.admissibility(small, 4.0);
  const double expect =
      0.5 * std::sqrt(0.5 * 0.05 * 0.05 / (4.0 * kPi * kPi + 4.0));
  CHECK(v2.kappa_scaled_norm == doctest::Approx(expect).epsilon(1e-10));
  CHECK(v2.ok);

  // g-band check with a solve attached
  SchrodingerSolve s = solver.solve(small, 4.0);
  AdmissibilityVerdict v3 = solver.admissibility(small, 4.0, &s);
  CHECK(v3.g_range_ok);
  CHECK(v3.ok);
}

TEST_CASE("g stays in [1/(4k), 3/(4k)] for admissible seeded profiles") {
  SchrodingerSolver solver;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Profile q = seeded_profile(seed, Geometry::Circle, 128, 1.0, 0.08);
    for (double kappa : {1.0, 2.0}) {
      SchrodingerSolve s = solver.solve(q, kappa);
      for (double gv : s.g.samples()) {
        CHECK(gv >= 1.0 / (4.0 * kappa));
        CHECK(gv <= 3.0 / (4.0 * kappa));
      }
    }
  }
}

TEST_CASE("elliptic identity residual") {
  SchrodingerSolver solver;
  SchrodingerSolve free = solver.solve(constant(0.0, 64), 1.0);
  CHECK(elliptic_residual(free, constant(0.0, 64)) < 1e-9);
  SchrodingerSolve cst = solver.solve(constant(0.25, 64), 1.0);
  CHECK(elliptic_residual(cst, constant(0.25, 64)) < 1e-9);

  Profile q = Profile::from_function(Geometry::Circle, 256, 1.0, [](double x) {
    return 0.05 * std::cos(2.0 * kPi * x) + 0.02 * std::cos(4.0 * kPi * x);
  });
  SchrodingerSolve s = solver.solve(q, 2.0);
  CHECK(elliptic_residual(s, q) < 1e-6);
}

TEST_CASE("kernel identity on the line (GgG)") {
  SchrodingerSolver solver;
  Profile zero = Profile::zeros(Geometry::Line, 128, 20.0);
  CHECK(greens_kernel_identity_residual(zero, 1.0, solver) < 1e-8);

  Profile bump = Profile::from_function(Geometry::Line, 256, 24.0, [](double x) {
    return 0.08 * std::exp(-0.5 * x * x);
  });
  CHECK(greens_kernel_identity_residual(bump, 2.0, solver) < 1e-6);
}

TEST_CASE("kernel identity on the circle via geometric summation") {
  SchrodingerSolver solver;
  Profile q = seeded_profile(6, Geometry::Circle, 128, 1.0, 0.06);
  CHECK(greens_kernel_identity_residual_circle(q, 1.5, solver) < 1e-6);
}

TEST_CASE("translation covariance of g") {
  SchrodingerSolver solver;
  Profile q = seeded_profile(9, Geometry::Circle, 128, 1.0, 0.08);
  Profile g_shifted_q = solver.greens_diag(q.shifted(16), 1.0);
  Profile g_then_shift = solver.greens_diag(q, 1.0).shifted(16);
  CHECK((g_shifted_q - g_then_shift).max_abs() < 1e-10);
}

TEST_CASE("line scaling identity for g") {
  // g(x; kappa, q_lambda) = g(lambda x; kappa/lambda, q) / lambda
  SchrodingerSolver solver;
  const double lambda = 2.0;
  auto base = [](double x) { return 0.04 * std::exp(-0.5 * x * x); };
  Profile q = Profile::from_function(Geometry::Line, 256, 40.0, base);
  Profile q_lam = Profile::from_function(Geometry::Line, 256, 20.0, [&](double x) {
    return lambda * lambda * base(lambda * x);
  });
  Profile g = solver.greens_diag(q, 1.0);
  Profile g_lam = solver.greens_diag(q_lam, 2.0);
  double worst = 0.0;
  for (std::size_t j = 0; j < q_lam.size(); ++j) {
    const double expect = g.samples()[j] / lambda;  // lambda x_j(small box) = x_j(big box)
    worst = std::max(worst,
                     std::abs(g_lam.samples()[j] - expect) / std::abs(expect));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("H1 bound on g - 1/(2 kappa)") {
  SchrodingerSolver solver;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Profile q = seeded_profile(seed, Geometry::Circle, 128, 1.0, 0.08);
    for (double kappa : {1.0, 2.0, 4.0}) {
      Profile g = solver.greens_diag(q, kappa);
      Profile dev = g - 0.5 / kappa;
      const double h1 = std::sqrt(dev.sobolev_sq(1.0, 1.0));
      const double delta = q.sobolev_norm(-1.0, 1.0);
      CHECK(h1 <= 2.0 * delta / kappa);
    }
  }
}
