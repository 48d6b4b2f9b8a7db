#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kdvlab/profile.hpp"
#include "kdvlab/schrodinger.hpp"

namespace kdvlab {

enum class Hamiltonian { Kdv, Hk, Diff, Fifth, FifthHk, FifthDiff };
enum class Stepper { Default, Etd4, Rk4If };

struct FlowSpec {
  Hamiltonian hamiltonian = Hamiltonian::Kdv;
  double kappa = 2.0;  // used by Hk / Diff / FifthHk / FifthDiff
  double dt = 1e-3;
  double T = 1.0;
  Stepper stepper = Stepper::Default;
  double snapshot_interval = 0.0;  // 0 -> T/64
  /// kappa grid for per-snapshot alpha diagnostics; empty disables them.
  std::vector<double> diag_kappas = {1.0, 2.0};
  /// Zero all modes with |index| > filter_band after each step (0 = off).
  std::size_t filter_band = 0;
  GreensRoute greens_route = GreensRoute::Auto;
};

struct Snapshot {
  double t = 0.0;
  Profile q;
};

struct DiagnosticsRow {
  double t = 0.0;
  double mass = 0.0, momentum = 0.0, h_kdv = 0.0;
  std::vector<double> alphas;
};

struct Trajectory {
  FlowSpec spec;
  std::vector<Snapshot> snapshots;
  std::vector<DiagnosticsRow> diagnostics;
  bool completed = true;
  std::string failure;
};

/// dq/dt for the chosen Hamiltonian, exactly as the bracket produces it.
Profile vector_field(const Profile& q, const FlowSpec& spec,
                     const SchrodingerSolver& solver);

Trajectory evolve(const Profile& q0, const FlowSpec& spec,
                  const SchrodingerSolver& solver);

struct GEvolutionResiduals {
  /// identity name -> relative L2 mismatch of d/dt vs the analytic flux form
  std::vector<std::pair<std::string, double>> entries;
  double alpha_drift = 0.0;
};

/// Centered-in-time residuals of the g(x; varkappa) evolution identities
/// along a computed trajectory, evaluated at the middle snapshot.
GEvolutionResiduals g_evolution_residual(const Trajectory& traj,
                                         double varkappa,
                                         const SchrodingerSolver& solver);

const char* hamiltonian_name(Hamiltonian h);

}  // namespace kdvlab
