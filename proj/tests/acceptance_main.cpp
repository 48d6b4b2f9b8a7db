// Acceptance suite: every criterion prints one pass/fail line; exit status is
// the number of failures.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "kdvlab/experiments.hpp"
#include "kdvlab/flows.hpp"
#include "kdvlab/invariants.hpp"
#include "kdvlab/profile.hpp"
#include "kdvlab/schrodinger.hpp"

using namespace kdvlab;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Criterion {
  int id;
  std::string title;
  std::function<bool(std::string&)> run;
};

bool check(bool ok, const std::string& what, std::string& detail) {
  if (!ok) detail += (detail.empty() ? "" : "; ") + what;
  return ok;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

Profile circle_two_mode(std::size_t n = 128) {
  return Profile::from_function(Geometry::Circle, n, 1.0, [](double x) {
    return 0.1 * std::cos(2.0 * kPi * x) + 0.05 * std::cos(4.0 * kPi * x);
  });
}

Profile line_bump(std::size_t n, double L, double amp, double sigma) {
  return Profile::from_function(Geometry::Line, n, 2.0 * L, [=](double x) {
    return amp * std::exp(-x * x / (2.0 * sigma * sigma));
  });
}

// ---------------------------------------------------------------- 1
bool c1_constant_potential(std::string& d) {
  SchrodingerSolver solver({.gamma_tol = 1e-13});
  Profile q = Profile::zeros(Geometry::Circle, 128, 1.0) + 0.25;
  const double g_exact = 0.5 / std::sqrt(1.25);
  const double gamma_exact = std::sqrt(1.25);
  const double alpha_exact = 1.0 - std::sqrt(1.25) + 0.125;

  bool ok = true;
  SchrodingerSolve s = solver.solve(q, 1.0);
  double g_err = 0.0;
  for (double v : s.g.samples())
    g_err = std::max(g_err, std::abs(v - g_exact) / g_exact);
  ok &= check(g_err < 1e-9, "g deviates " + fmt(g_err), d);
  const double gamma = solver.monodromy(q, 1.0).gamma;
  ok &= check(std::abs(gamma - gamma_exact) / gamma_exact < 1e-9,
              "gamma deviates " + fmt(gamma - gamma_exact), d);
  for (auto route : {AlphaRoute::Density, AlphaRoute::Floquet, AlphaRoute::Det2}) {
    const double a = alpha(q, 1.0, route, solver);
    ok &= check(std::abs(a - alpha_exact) / alpha_exact < 1e-9,
                "alpha route " + std::to_string(static_cast<int>(route)) +
                    " deviates " + fmt(a - alpha_exact),
                d);
  }
  return ok;
}

// ---------------------------------------------------------------- 2, 3
std::vector<Profile> seeded_family() {
  std::vector<Profile> out;
  for (std::uint64_t seed = 1; seed <= 8; ++seed)
    out.push_back(seeded_profile(seed, Geometry::Circle, 256, 1.0, 0.05));
  return out;
}

bool c2_triple_route(std::string& d) {
  SchrodingerSolver solver;
  double worst = 0.0;
  for (const Profile& q : seeded_family())
    for (double kappa : {2.0, 4.0})
      worst = std::max(worst,
                       invariant_breakdown(q, kappa, solver).cross_discrepancy);
  d = "max cross-route discrepancy " + fmt(worst);
  return worst < 1e-7;
}

bool c3_elliptic(std::string& d) {
  SchrodingerSolver solver;
  double worst = 0.0;
  for (const Profile& q : seeded_family())
    for (double kappa : {2.0, 4.0}) {
      SchrodingerSolve s = solver.solve(q, kappa);
      worst = std::max(worst, elliptic_residual(s, q));
    }
  d = "max relative L2 residual " + fmt(worst);
  return worst < 1e-6;
}

// ---------------------------------------------------------------- 4
bool c4_functional_derivative(std::string& d) {
  SchrodingerSolver solver({.gamma_tol = 1e-13});
  Profile f = Profile::from_function(Geometry::Circle, 256, 1.0, [](double x) {
    return std::cos(2.0 * kPi * x);
  });
  bool ok = true;
  double worst_grad = 0.0, worst_dk = 0.0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Profile q = seeded_profile(seed, Geometry::Circle, 256, 1.0, 0.05);
    worst_grad = std::max(worst_grad,
                          alpha_gradient_residual(q, 2.0, f, 1e-5, solver));
    worst_dk = std::max(worst_dk,
                        kappa_derivative_residual(q, 2.0, 1e-4, solver));
  }
  ok &= check(worst_grad < 1e-8, "gradient residual " + fmt(worst_grad), d);
  ok &= check(worst_dk < 1e-6, "kappa-derivative residual " + fmt(worst_dk), d);

  // eps-halving contraction, measured where the quadratic term dominates the
  // alpha noise floor: constant background, constant direction
  Profile qc = Profile::zeros(Geometry::Circle, 64, 1.0) + 0.1;
  Profile fc = Profile::zeros(Geometry::Circle, 64, 1.0) + 1.0;
  const double r1 = alpha_gradient_residual(qc, 1.0, fc, 2e-3, solver);
  const double r2 = alpha_gradient_residual(qc, 1.0, fc, 1e-3, solver);
  const double ratio = r1 / r2;
  ok &= check(ratio > 3.5 && ratio < 4.5, "contraction ratio " + fmt(ratio), d);
  if (d.empty())
    d = "grad " + fmt(worst_grad) + ", dkappa " + fmt(worst_dk) + ", ratio " +
        fmt(ratio);
  return ok;
}

// ---------------------------------------------------------------- 5
bool c5_conservation(std::string& d) {
  bool ok = true;
  auto run = [&](const char* name, const FlowSpec& spec, const Profile& q0,
                 const SchrodingerSolver& solver) {
    ExperimentReport rep = conservation_drift(spec, q0, 1.0, solver);
    for (const auto& e : rep.entries)
      if (!e.pass)
        ok &= check(false,
                    std::string(name) + " " + e.name + " = " + fmt(e.value), d);
  };

  SchrodingerSolver solver;
  Profile qc = circle_two_mode();
  run("kdv", {.hamiltonian = Hamiltonian::Kdv, .dt = 2e-4}, qc, solver);
  run("hk", {.hamiltonian = Hamiltonian::Hk, .kappa = 2.0, .dt = 2e-3}, qc,
      solver);

  Profile q_small_box = line_bump(128, 4.0, 0.08, 0.55);
  run("diff", {.hamiltonian = Hamiltonian::Diff, .kappa = 2.0, .dt = 2e-3},
      q_small_box, solver);
  // wider box: the fifth-order dispersion needs its beat periods resolved
  Profile q_mid_box = line_bump(128, 8.0, 0.05, 1.0);
  run("fifth_hk",
      {.hamiltonian = Hamiltonian::FifthHk, .kappa = 2.0, .dt = 2e-3},
      q_mid_box, solver);

  Profile q_wide = line_bump(128, 20.0, 0.05, 1.0);
  run("fifth", {.hamiltonian = Hamiltonian::Fifth, .dt = 2e-3}, q_wide, solver);
  if (ok) d = "all five flows drift below 1e-7";
  return ok;
}

// ---------------------------------------------------------------- 6
bool c6_soliton(std::string& d) {
  SchrodingerSolver solver;
  const double c = 4.0, L = 20.0, x0 = -5.0, T = 1.0;
  auto soliton = [&](double x, double t) {
    const double s = 1.0 / std::cosh(0.5 * std::sqrt(c) * (x - x0 - c * t));
    return -0.5 * c * s * s;
  };
  Profile q0 = Profile::from_function(Geometry::Line, 512, 2.0 * L,
                                      [&](double x) { return soliton(x, 0.0); });
  FlowSpec spec{.hamiltonian = Hamiltonian::Kdv, .dt = 1e-4, .T = T};
  spec.diag_kappas.clear();
  spec.snapshot_interval = T;
  Trajectory traj = evolve(q0, spec, solver);
  if (!traj.completed) {
    d = "integration failed: " + traj.failure;
    return false;
  }
  Profile expect = Profile::from_function(Geometry::Line, 512, 2.0 * L,
                                          [&](double x) { return soliton(x, T); });
  const double err =
      std::sqrt((traj.snapshots.back().q - expect).sobolev_sq(0.0) /
                expect.sobolev_sq(0.0));
  d = "shape error after exact translate " + fmt(err);
  return err < 1e-6;
}

// ---------------------------------------------------------------- 7
bool c7_dispersion(std::string& d) {
  SchrodingerSolver solver;
  bool ok = true;
  auto measure = [&](Hamiltonian h, double kappa, int mode) {
    const double xi = 2.0 * kPi * mode;
    Profile q = Profile::from_function(Geometry::Circle, 64, 1.0, [&](double x) {
      return 1e-4 * std::cos(xi * x);
    });
    FlowSpec spec;
    spec.hamiltonian = h;
    spec.kappa = kappa;
    const double omega_formula =
        h == Hamiltonian::Fifth
            ? std::pow(xi, 5)
            : 4.0 * kappa * kappa * std::pow(xi, 3) / (xi * xi + 4.0 * kappa * kappa);
    const double T = 1.0 / omega_formula;  // ~1 rad, no wrap
    spec.T = T;
    spec.dt = T / 64.0;
    spec.snapshot_interval = T;
    spec.diag_kappas.clear();
    Trajectory traj = evolve(q, spec, solver);
    const std::complex<double> r =
        traj.snapshots.back().q.coefficient(mode) / q.coefficient(mode);
    return std::arg(r) / T;
  };
  for (double kappa : {4.0, 8.0})
    for (int mode : {1, 2}) {
      const double xi = 2.0 * kPi * mode;
      const double expect =
          4.0 * kappa * kappa * std::pow(xi, 3) / (xi * xi + 4.0 * kappa * kappa);
      const double got = measure(Hamiltonian::Hk, kappa, mode);
      ok &= check(std::abs(got - expect) / expect < 1e-3,
                  "hk omega(k=" + fmt(kappa) + ",m=" + std::to_string(mode) +
                      ") rel err " + fmt(std::abs(got - expect) / expect),
                  d);
    }
  for (int mode : {1, 2}) {
    const double xi = 2.0 * kPi * mode;
    const double got = measure(Hamiltonian::Fifth, 1.0, mode);
    ok &= check(std::abs(got - std::pow(xi, 5)) / std::pow(xi, 5) < 1e-3,
                "fifth omega mode " + std::to_string(mode) + " rel err " +
                    fmt(std::abs(got - std::pow(xi, 5)) / std::pow(xi, 5)),
                d);
  }
  if (ok) d = "hk and fifth linear symbols within 1e-3";
  return ok;
}

// ---------------------------------------------------------------- 8
bool c8_kappa_convergence(std::string& d) {
  SchrodingerSolver solver;
  Profile q0 = line_bump(256, 4.0, 0.08, 0.55);
  ExperimentOptions opt;
  opt.dt = 1e-3;
  ExperimentReport rep =
      kappa_convergence(q0, 0.25, {4.0, 8.0, 16.0, 32.0}, solver, opt);
  for (const auto& e : rep.entries)
    if (!e.pass) check(false, e.name + " = " + fmt(e.value), d);
  if (rep.pass)
    d = "E(4)/E(32) = " + fmt(rep.csv_rows.front()[1] / rep.csv_rows.back()[1]) +
        ", E and D strictly decreasing, E within 2x of D";
  return rep.pass;
}

// ---------------------------------------------------------------- 9
bool c9_symbol_limits(std::string& d) {
  SchrodingerSolver solver;
  bool ok = true;
  double s1[2], s2[2];
  int i = 0;
  for (std::size_t n : {128u, 256u}) {
    Profile q = Profile::from_function(Geometry::Circle, n, 1.0, [](double x) {
      return 0.05 * std::cos(2.0 * kPi * x);
    });
    ExperimentReport rep = symbol_convergence(q, {4.0, 8.0, 16.0, 32.0}, solver);
    ok &= rep.pass;
    for (const auto& e : rep.entries) {
      if (e.name == "first_limit_slope") s1[i] = e.value;
      if (e.name == "fifth_limit_slope") s2[i] = e.value;
      if (!e.pass) check(false, e.name + " = " + fmt(e.value), d);
    }
    ++i;
  }
  ok &= check(std::abs(s1[0] - s1[1]) < 0.05,
              "first slope grid shift " + fmt(s1[0] - s1[1]), d);
  ok &= check(std::abs(s2[0] - s2[1]) < 0.05,
              "fifth slope grid shift " + fmt(s2[0] - s2[1]), d);
  if (ok)
    d = "slopes " + fmt(s1[1]) + " and " + fmt(s2[1]) +
        " (within -2 +- 0.3, grid-stable to 0.05)";
  return ok;
}

// ---------------------------------------------------------------- 10
bool c10_local_smoothing(std::string& d) {
  SchrodingerSolver solver;
  Profile q0 = line_bump(512, 40.0, 0.08, 2.0);
  SmoothingParams params;  // T = 1, dt = 2e-4, cadence 1/128, C = 6
  ExperimentReport rep = local_smoothing_budget(q0, params, solver);
  for (const auto& e : rep.entries)
    if (!e.pass && e.relation != "info")
      check(false, e.name + " = " + fmt(e.value), d);
  if (rep.pass)
    d = "budget mismatch " + fmt(rep.csv_rows.front()[3]) +
        ", contraction in [2,8], window mass bounded";
  return rep.pass;
}

// ---------------------------------------------------------------- 11
bool c11_structural(std::string& d) {
  SchrodingerSolver solver;
  bool ok = true;
  for (std::uint64_t seed : {1ull, 2ull}) {
    Profile q = seeded_profile(seed, Geometry::Circle, 128, 1.0, 0.06);
    for (double kappa : {1.0, 2.0}) {
      Monodromy mono = solver.monodromy(q, kappa);
      ok &= check(std::abs(mono.det() - 1.0) < 1e-10,
                  "monodromy det defect " + fmt(mono.det() - 1.0), d);
      SchrodingerSolve s = solver.solve(q, kappa);
      ok &= check(s.wronskian_defect < 1e-8,
                  "wronskian defect " + fmt(s.wronskian_defect), d);
      Profile rho = rho_density(q, kappa, s.g);
      double rho_min = 0.0;
      for (double v : rho.samples()) rho_min = std::min(rho_min, v);
      ok &= check(rho_min > -1e-9, "rho min " + fmt(rho_min), d);
      AdmissibilityVerdict v = solver.admissibility(q, kappa, &s);
      ok &= check(v.g_range_ok, "g outside [1/(4k), 3/(4k)]", d);
    }
    // translation covariance at an exact grid shift
    Profile g_shift_q = solver.greens_diag(q.shifted(16), 1.0);
    Profile g_q_shift = solver.greens_diag(q, 1.0).shifted(16);
    const double terr = (g_shift_q - g_q_shift).max_abs();
    ok &= check(terr < 1e-10, "translation covariance " + fmt(terr), d);
  }
  // line scaling identities (q scaling / G scaling)
  Profile qline = line_bump(256, 20.0, 0.04, 1.0);
  ExperimentReport rep = scaling_check(qline, 2.0, 4.0, solver);
  for (const auto& e : rep.entries)
    if (!e.pass) ok &= check(false, e.name + " = " + fmt(e.value), d);
  if (ok) d = "monodromy/Wronskian/rho/g-band/translation/scaling all hold";
  return ok;
}

// ---------------------------------------------------------------- 12
bool c12_equicontinuity(std::string& d) {
  SchrodingerSolver solver;
  // band-limited profile with decaying octaves; band limit 4 -> kappa* = 128
  Profile q = Profile::from_function(Geometry::Circle, 128, 1.0, [](double x) {
    return 0.1 * std::cos(2.0 * kPi * x) + 0.02 * std::cos(4.0 * kPi * x) +
           0.004 * std::cos(8.0 * kPi * x);
  });
  std::vector<double> kappas{2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0};
  auto curve = equicontinuity_profile(q, kappas, solver);
  bool ok = true;
  for (std::size_t i = 1; i < curve.size(); ++i)
    ok &= check(curve[i].kappa_alpha < curve[i - 1].kappa_alpha,
                "not strictly decreasing at kappa " + fmt(curve[i].kappa), d);
  const double final_ratio = curve.back().kappa_alpha / curve.front().kappa_alpha;
  ok &= check(final_ratio < 1e-3,
              "kappa*alpha ratio at band-limit kappa " + fmt(final_ratio), d);
  for (const auto& p : curve) {
    const double band_ratio = p.kappa_alpha / (p.kappa * p.comparison);
    ok &= check(band_ratio > 0.25 && band_ratio < 4.0,
                "comparison ratio " + fmt(band_ratio) + " at kappa " +
                    fmt(p.kappa),
                d);
  }
  if (ok)
    d = "kappa*alpha decays to " + fmt(final_ratio) +
        " of its kappa=2 value; comparison ratio within [1/4, 4]";
  return ok;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria{
      {1, "constant-potential closed forms (g, gamma, alpha by all routes)",
       c1_constant_potential},
      {2, "triple-route alpha agreement on the seeded family", c2_triple_route},
      {3, "elliptic identity residual on the seeded family", c3_elliptic},
      {4, "functional derivative and kappa-derivative of alpha",
       c4_functional_derivative},
      {5, "invariant drift along the five flows", c5_conservation},
      {6, "soliton propagation", c6_soliton},
      {7, "linearized dispersion of hk and fifth", c7_dispersion},
      {8, "kappa-convergence of the hk flow to kdv", c8_kappa_convergence},
      {9, "symbol limits with slope -2", c9_symbol_limits},
      {10, "local smoothing budget", c10_local_smoothing},
      {11, "structural invariants", c11_structural},
      {12, "equicontinuity surrogate", c12_equicontinuity},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", pass ? "PASS" : "FAIL",
                c.id, c.title.c_str(), secs, detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  std::printf("%d/12 criteria passed\n", 12 - failures);
  return failures;
}
