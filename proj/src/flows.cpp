#include "kdvlab/flows.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "kdvlab/errors.hpp"
#include "kdvlab/invariants.hpp"

namespace kdvlab {

namespace {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

bool needs_greens(Hamiltonian h) {
  return h == Hamiltonian::Hk || h == Hamiltonian::Diff ||
         h == Hamiltonian::FifthHk || h == Hamiltonian::FifthDiff;
}

// Dispersion of the linearization at q == 0; the steppers apply it exactly so
// only the O(q^2) remainder is stepped explicitly.
double linear_omega(Hamiltonian h, double xi, double kappa) {
  const double k2 = kappa * kappa;
  const double d = xi * xi + 4.0 * k2;
  switch (h) {
    case Hamiltonian::Kdv:
      return xi * xi * xi;
    case Hamiltonian::Hk:
      return 4.0 * k2 * xi * xi * xi / d;
    case Hamiltonian::Diff:
      return std::pow(xi, 5) / d;
    case Hamiltonian::Fifth:
      return std::pow(xi, 5);
    case Hamiltonian::FifthHk:
      return 4.0 * k2 * std::pow(xi, 5) / d;
    case Hamiltonian::FifthDiff:
      return std::pow(xi, 7) / d;
  }
  return 0.0;
}

// The box-periodized dynamics is what gets stepped, so line-geometry flows
// draw g from the periodic-box solve; within the decay guard it matches the
// shooting solve to e^{-2 kappa L}.
Profile flow_greens(const Profile& q, double kappa,
                    const SchrodingerSolver& solver, GreensRoute route) {
  if (q.geometry() == Geometry::Line)
    return solver.solve_periodic_box(q, kappa).g;
  return solver.solve(q, kappa, route).g;
}

// 16 kappa^5 g' minus its linearization -16 kappa^4 i xi/(xi^2+4kappa^2) q^;
// tends to 6 q q' as kappa -> infinity.
Profile hk_remainder(const Profile& q, double kappa,
                     const SchrodingerSolver& solver, GreensRoute route) {
  Profile g = flow_greens(q, kappa, solver, route);
  const double k4 = kappa * kappa * kappa * kappa;
  Profile lin = q.apply_multiplier([kappa, k4](double xi) {
    return cplx(0.0, -16.0 * k4 * xi / (xi * xi + 4.0 * kappa * kappa));
  });
  return (16.0 * k4 * kappa) * g.derivative() - lin;
}

// Nonlinear part of the H^5th_kappa field: -64 kappa^7 g' minus its
// linearization, plus 24 kappa^2 q q'; tends to zero as kappa -> infinity.
Profile fifth_hk_remainder(const Profile& q, double kappa,
                           const SchrodingerSolver& solver, GreensRoute route) {
  Profile g = flow_greens(q, kappa, solver, route);
  const double k6 = std::pow(kappa, 6);
  Profile lin = q.apply_multiplier([kappa, k6](double xi) {
    return cplx(0.0, 64.0 * k6 * xi / (xi * xi + 4.0 * kappa * kappa));
  });
  Profile qqp = dealiased_product(q, q.derivative());
  return (-64.0 * k6 * kappa) * g.derivative() - lin +
         24.0 * (kappa * kappa) * qqp;
}

Profile kdv_nonlinearity(const Profile& q) {
  return 6.0 * dealiased_product(q, q.derivative());
}

Profile fifth_nonlinearity(const Profile& q) {
  Profile qp = q.derivative();
  Profile qpp = q.derivative(2);
  Profile qppp = q.derivative(3);
  return -20.0 * dealiased_product(qp, qpp) -
         10.0 * dealiased_product(q, qppp) +
         30.0 * dealiased_product({&q, &q, &qp});
}

Profile remainder(const Profile& q, const FlowSpec& spec,
                  const SchrodingerSolver& solver) {
  switch (spec.hamiltonian) {
    case Hamiltonian::Kdv:
      return kdv_nonlinearity(q);
    case Hamiltonian::Hk:
      return hk_remainder(q, spec.kappa, solver, spec.greens_route);
    case Hamiltonian::Diff:
      return kdv_nonlinearity(q) -
             hk_remainder(q, spec.kappa, solver, spec.greens_route);
    case Hamiltonian::Fifth:
      return fifth_nonlinearity(q);
    case Hamiltonian::FifthHk:
      return fifth_hk_remainder(q, spec.kappa, solver, spec.greens_route);
    case Hamiltonian::FifthDiff:
      return fifth_nonlinearity(q) -
             fifth_hk_remainder(q, spec.kappa, solver, spec.greens_route);
  }
  throw UsageError("unknown hamiltonian");
}

struct EtdCoeffs {
  cvec E, E2, Q, f1, f2, f3;
};

// Cox--Matthews phi-weights; power series below |z| = 1 avoids cancellation.
void etd_weights(cplx z, cplx& Q, cplx& f1, cplx& f2, cplx& f3) {
  if (std::abs(z) < 1.0) {
    cplx zj = 1.0;
    Q = f1 = f2 = f3 = 0.0;
    double fact_k = 6.0;    // (j+3)!
    double half_pow = 0.5;  // 2^{-(j+1)}
    double fact_j1 = 1.0;   // (j+1)!
    for (int j = 0; j <= 24; ++j) {
      const double k = j + 3.0;
      f1 += zj * ((4.0 - 3.0 * k + k * (k - 1.0)) / fact_k);
      f2 += zj * ((k - 2.0) / fact_k);
      f3 += zj * ((4.0 - k) / fact_k);
      Q += zj * (half_pow / fact_j1);
      zj *= z;
      fact_k *= (k + 1.0);
      half_pow *= 0.5;
      fact_j1 *= (j + 2.0);
    }
    return;
  }
  const cplx ez = std::exp(z);
  const cplx z3 = z * z * z;
  Q = (std::exp(0.5 * z) - 1.0) / z;
  f1 = (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
  f2 = (2.0 + z + ez * (-2.0 + z)) / z3;
  f3 = (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
}

EtdCoeffs make_coeffs(const Profile& grid, const FlowSpec& spec, double h) {
  const std::size_t n = grid.size();
  EtdCoeffs c;
  c.E.resize(n);
  c.E2.resize(n);
  c.Q.resize(n);
  c.f1.resize(n);
  c.f2.resize(n);
  c.f3.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // the odd symbol has no real Nyquist representative
    const double omega =
        k == n / 2 ? 0.0
                   : linear_omega(spec.hamiltonian, grid.frequency(k), spec.kappa);
    const cplx z(0.0, h * omega);
    c.E[k] = std::exp(z);
    c.E2[k] = std::exp(0.5 * z);
    cplx Q, f1, f2, f3;
    etd_weights(z, Q, f1, f2, f3);
    c.Q[k] = h * Q;
    c.f1[k] = h * f1;
    c.f2[k] = h * f2;
    c.f3[k] = h * f3;
  }
  return c;
}

cvec hadamard(const cvec& a, const cvec& b) {
  cvec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

void validate_spec(const FlowSpec& spec) {
  if (spec.dt == 0.0) throw ConfigError("flow: dt must be nonzero");
  if ((spec.T > 0) != (spec.dt > 0))
    throw ConfigError("flow: dt and T must share a sign");
  if (needs_greens(spec.hamiltonian) && spec.kappa < 1.0)
    throw ConfigError("flow: kappa >= 1 required for this hamiltonian");
}

Profile pointwise_divide(const Profile& a, const Profile& b) {
  require_same_grid(a, b);
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(std::abs(b.samples()[j]) > 0.0))
      throw UsageError("pointwise division by zero");
    out[j] = a.samples()[j] / b.samples()[j];
  }
  return Profile(a.geometry(), a.size(), a.period(), std::move(out));
}

Profile half_reciprocal(const Profile& g) {
  std::vector<double> out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out[j] = 0.5 / g.samples()[j];
  return Profile(g.geometry(), g.size(), g.period(), std::move(out));
}

double rel_l2(const Profile& diff, const Profile& scale) {
  const double num = std::sqrt(diff.sobolev_sq(0.0));
  const double den = std::sqrt(scale.sobolev_sq(0.0));
  return den > 1e-12 ? num / den : num;
}

}  // namespace

const char* hamiltonian_name(Hamiltonian h) {
  switch (h) {
    case Hamiltonian::Kdv: return "kdv";
    case Hamiltonian::Hk: return "hk";
    case Hamiltonian::Diff: return "diff";
    case Hamiltonian::Fifth: return "fifth";
    case Hamiltonian::FifthHk: return "fifth_hk";
    case Hamiltonian::FifthDiff: return "fifth_diff";
  }
  return "?";
}

Profile vector_field(const Profile& q, const FlowSpec& spec,
                     const SchrodingerSolver& solver) {
  if (needs_greens(spec.hamiltonian) && spec.kappa < 1.0)
    throw ConfigError("vector_field: kappa >= 1 required");
  Profile lin = q.apply_multiplier([&](double xi) {
    return cplx(0.0, linear_omega(spec.hamiltonian, xi, spec.kappa));
  });
  return lin + remainder(q, spec, solver);
}

Trajectory evolve(const Profile& q0, const FlowSpec& spec_in,
                  const SchrodingerSolver& solver) {
  FlowSpec spec = spec_in;
  validate_spec(spec);
  if (spec.snapshot_interval == 0.0) spec.snapshot_interval = spec.T / 64.0;
  if ((spec.T < 0.0) != (spec.snapshot_interval < 0.0))
    spec.snapshot_interval = -spec.snapshot_interval;
  const long steps_per_snap =
      std::max<long>(1, std::lround(spec.snapshot_interval / spec.dt));
  spec.dt = spec.snapshot_interval / static_cast<double>(steps_per_snap);
  const long nsnap =
      std::max<long>(1, std::lround(spec.T / spec.snapshot_interval));

  Trajectory traj;
  traj.spec = spec;

  const bool etd = spec.stepper == Stepper::Etd4 ||
                   (spec.stepper == Stepper::Default &&
                    (spec.hamiltonian == Hamiltonian::Kdv ||
                     spec.hamiltonian == Hamiltonian::Fifth));
  EtdCoeffs co = make_coeffs(q0, spec, spec.dt);

  auto N = [&](const cvec& coef) -> cvec {
    Profile p =
        Profile::from_spectrum(q0.geometry(), q0.size(), q0.period(), coef);
    return remainder(p, spec, solver).spectrum();
  };
  auto filter = [&](cvec& coef) {
    if (spec.filter_band == 0) return;
    const std::size_t n = coef.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = k <= n / 2 ? k : n - k;
      if (idx > spec.filter_band) coef[k] = 0.0;
    }
  };

  const double l2_0 = std::sqrt(q0.l2_sq_grid());
  cvec u = q0.spectrum();

  // Diagnostics keep their own tight solver: the stepping tolerance must not
  // limit what the conservation checks can resolve.
  SolverOptions diag_opt = solver.options();
  diag_opt.gamma_tol = std::min(diag_opt.gamma_tol, 1e-13);
  SchrodingerSolver diag_solver(diag_opt);

  auto record = [&](double t) {
    Profile p = Profile::from_spectrum(q0.geometry(), q0.size(), q0.period(), u);
    DiagnosticsRow row;
    row.t = t;
    row.mass = p.integral();
    row.momentum = 0.5 * inner(p, p);
    Profile dp = p.derivative();
    row.h_kdv = 0.5 * inner(dp, dp) + integral_product({&p, &p, &p});
    // Line trajectories may wrap the box; the periodic-box Floquet solve is
    // the invariant structure of the dynamics actually simulated.
    for (double dk : spec.diag_kappas)
      row.alphas.push_back(
          rho_density(p, dk,
                      q0.geometry() == Geometry::Line
                          ? diag_solver.solve_periodic_box(p, dk).g
                          : diag_solver.solve(p, dk, spec.greens_route).g)
              .integral());
    traj.snapshots.push_back({t, std::move(p)});
    traj.diagnostics.push_back(std::move(row));
  };

  try {
    record(0.0);
    for (long snap = 1; snap <= nsnap; ++snap) {
      for (long s = 0; s < steps_per_snap; ++s) {
        if (etd) {
          cvec Nu = N(u);
          cvec a = hadamard(co.E2, u);
          cvec qn = hadamard(co.Q, Nu);
          for (std::size_t i = 0; i < a.size(); ++i) a[i] += qn[i];
          cvec Na = N(a);
          cvec b = hadamard(co.E2, u);
          cvec qa = hadamard(co.Q, Na);
          for (std::size_t i = 0; i < b.size(); ++i) b[i] += qa[i];
          cvec Nb = N(b);
          cvec c = hadamard(co.E2, a);
          for (std::size_t i = 0; i < c.size(); ++i)
            c[i] += co.Q[i] * (2.0 * Nb[i] - Nu[i]);
          cvec Nc = N(c);
          cvec next = hadamard(co.E, u);
          for (std::size_t i = 0; i < next.size(); ++i)
            next[i] += co.f1[i] * Nu[i] + co.f2[i] * 2.0 * (Na[i] + Nb[i]) +
                       co.f3[i] * Nc[i];
          u = std::move(next);
        } else {  // Lawson RK4 with the exact phase as integrating factor
          const double h = spec.dt;
          cvec g1 = N(u);
          cvec stage(u.size());
          for (std::size_t i = 0; i < u.size(); ++i)
            stage[i] = co.E2[i] * (u[i] + 0.5 * h * g1[i]);
          cvec g2 = N(stage);
          for (std::size_t i = 0; i < u.size(); ++i)
            stage[i] = co.E2[i] * u[i] + 0.5 * h * g2[i];
          cvec g3 = N(stage);
          for (std::size_t i = 0; i < u.size(); ++i)
            stage[i] = co.E[i] * u[i] + h * co.E2[i] * g3[i];
          cvec g4 = N(stage);
          cvec next = hadamard(co.E, u);
          for (std::size_t i = 0; i < u.size(); ++i)
            next[i] += h / 6.0 * (co.E[i] * g1[i] +
                                  2.0 * co.E2[i] * (g2[i] + g3[i]) + g4[i]);
          u = std::move(next);
        }
        filter(u);
      }
      record(static_cast<double>(snap) * spec.snapshot_interval);
      const double l2 = std::sqrt(traj.snapshots.back().q.l2_sq_grid());
      if (!(l2 < 1e3 * std::max(l2_0, 1e-12)) || !std::isfinite(l2)) {
        traj.completed = false;
        traj.failure = "blow-up guard tripped at t = " +
                       std::to_string(traj.snapshots.back().t);
        break;
      }
    }
  } catch (const std::exception& e) {
    traj.completed = false;
    traj.failure = e.what();
  }
  return traj;
}

GEvolutionResiduals g_evolution_residual(const Trajectory& traj,
                                         double varkappa,
                                         const SchrodingerSolver& solver) {
  if (traj.snapshots.size() < 5)
    throw UsageError("g_evolution_residual needs at least five snapshots");
  const Hamiltonian h = traj.spec.hamiltonian;
  const bool is_kdv = h == Hamiltonian::Kdv;
  const bool is_hk = h == Hamiltonian::Hk;
  const bool is_fifth = h == Hamiltonian::Fifth;
  const bool is_fifth_hk = h == Hamiltonian::FifthHk;
  if (!is_kdv && !is_hk && !is_fifth && !is_fifth_hk)
    throw UsageError("no g-evolution identity is catalogued for flow " +
                     std::string(hamiltonian_name(h)));
  if ((is_hk || is_fifth_hk) && varkappa == traj.spec.kappa)
    throw UsageError("identity requires varkappa != flow kappa");

  const std::size_t i = traj.snapshots.size() / 2;
  const Profile& q = traj.snapshots[i].q;
  const double dt = traj.snapshots[i + 1].t - traj.snapshots[i].t;

  const GreensRoute route = traj.spec.greens_route;
  std::vector<Profile> g_st;  // g at snapshots i-2 .. i+2
  for (std::size_t o = i - 2; o <= i + 2; ++o)
    g_st.push_back(solver.solve(traj.snapshots[o].q, varkappa, route).g);
  const Profile& g_mid = g_st[2];

  // 4th-order centered first derivative in time
  auto ddt = [&](const std::vector<Profile>& f) {
    return (f[0] - f[4] + 8.0 * (f[3] - f[1])) * (1.0 / (12.0 * dt));
  };
  std::vector<Profile> inv_st;
  for (const Profile& g : g_st) inv_st.push_back(half_reciprocal(g));
  Profile lhs_inv = ddt(inv_st);

  const double vk2 = varkappa * varkappa;
  GEvolutionResiduals out;
  out.alpha_drift =
      std::abs(rho_density(traj.snapshots[i + 2].q, varkappa, g_st[4]).integral() -
               rho_density(traj.snapshots[i - 2].q, varkappa, g_st[0]).integral());

  if (is_kdv) {
    Profile lhs_g = ddt(g_st);
    Profile rhs_c = -2.0 * dealiased_product(q.derivative(), g_mid) +
                    2.0 * dealiased_product(q, g_mid.derivative()) -
                    4.0 * vk2 * g_mid.derivative();
    out.entries.emplace_back("dg_dt", rel_l2(lhs_g - rhs_c, rhs_c));

    Profile rhs_inv = pointwise_divide(q - 2.0 * vk2, g_mid).derivative();
    out.entries.emplace_back("d_half_inv_g_dt",
                             rel_l2(lhs_inv - rhs_inv, rhs_inv));

    std::vector<Profile> rho_st;
    for (std::size_t o = 0; o < 5; ++o)
      rho_st.push_back(rho_density(traj.snapshots[i - 2 + o].q, varkappa, g_st[o]));
    Profile lhs_rho = ddt(rho_st);
    Profile q2 = dealiased_product(q, q);
    Profile smooth_q2 = q2.apply_multiplier([varkappa](double xi) {
      return cplx(6.0 * varkappa / (xi * xi + 4.0 * varkappa * varkappa), 0.0);
    });
    Profile kappa_minus_inv = half_reciprocal(g_mid) * -1.0 + varkappa;
    Profile flux = smooth_q2 + 2.0 * dealiased_product(q, kappa_minus_inv) -
                   4.0 * vk2 * rho_st[2];
    Profile rhs_rho = flux.derivative();
    out.entries.emplace_back("drho_dt", rel_l2(lhs_rho - rhs_rho, rhs_rho));

    Profile flux_c = 2.0 * g_mid.derivative(2) -
                     6.0 * dealiased_product(q, g_mid) - 12.0 * vk2 * g_mid;
    out.entries.emplace_back("dg_dt_flux_form",
                             rel_l2(lhs_g - flux_c.derivative(), rhs_c));
  } else if (is_hk) {
    const double k = traj.spec.kappa;
    const double k2 = k * k;
    Profile g_mid_k = solver.solve(q, k, route).g;
    Profile ratio = pointwise_divide(g_mid_k, g_mid);
    Profile rhs = ratio.derivative() * (-4.0 * std::pow(k, 5) / (k2 - vk2)) +
                  half_reciprocal(g_mid).derivative() * (4.0 * k2);
    out.entries.emplace_back("hk_d_half_inv_g_dt",
                             rel_l2(lhs_inv - rhs, rhs));
  } else if (is_fifth) {
    Profile num = q.derivative(2) * -1.0 + 3.0 * dealiased_product(q, q) -
                  q * (4.0 * vk2) + 8.0 * vk2 * vk2;
    Profile rhs = pointwise_divide(num, g_mid).derivative();
    out.entries.emplace_back("fifth_d_half_inv_g_dt",
                             rel_l2(lhs_inv - rhs, rhs));
  } else {  // fifth_hk
    const double k = traj.spec.kappa;
    const double k2 = k * k;
    Profile g_mid_k = solver.solve(q, k, route).g;
    Profile rhs = pointwise_divide(g_mid_k, g_mid).derivative() *
                      (16.0 * std::pow(k, 7) / (k2 - vk2)) -
                  half_reciprocal(g_mid).derivative() * (16.0 * k2 * k2) +
                  pointwise_divide(q - 2.0 * vk2, g_mid).derivative() *
                      (4.0 * k2);
    out.entries.emplace_back("fifth_hk_d_half_inv_g_dt",
                             rel_l2(lhs_inv - rhs, rhs));
  }
  return out;
}

}  // namespace kdvlab
