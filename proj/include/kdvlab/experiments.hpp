#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "kdvlab/flows.hpp"
#include "kdvlab/invariants.hpp"
#include "kdvlab/profile.hpp"
#include "kdvlab/schrodinger.hpp"

namespace kdvlab {

struct CheckEntry {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  /// "<=", ">=", or "info" (recorded, never failing)
  std::string relation = "<=";
  bool pass = true;

  static CheckEntry le(std::string name, double value, double threshold);
  static CheckEntry ge(std::string name, double value, double threshold);
  static CheckEntry info(std::string name, double value);
};

struct ExperimentReport {
  std::string name;
  nlohmann::json inputs;
  std::vector<CheckEntry> entries;
  std::vector<std::string> csv_header;
  std::vector<std::vector<double>> csv_rows;
  bool pass = true;
  double runtime_seconds = 0.0;

  void add(CheckEntry e);
  nlohmann::json to_json() const;
  std::string to_csv() const;
  /// <name>.report.json and <name>.csv under dir.
  void write(const std::string& dir) const;
};

struct ExperimentOptions {
  double dt = 1e-3;
  unsigned jobs = 0;  // 0 = hardware concurrency
};

/// Pointwise/integrated identity residuals and alpha route agreement for one
/// profile over a kappa list.
ExperimentReport identity_suite(const Profile& q,
                                const std::vector<double>& kappas,
                                const SchrodingerSolver& solver,
                                const ExperimentOptions& opt = {});

/// Flow approximation at desk scale: E(kappa) = sup_t || kdv(t) - hk(t) ||,
/// D(kappa) = sup_t || diff(t) - q0 ||, both in H^-1, over t in [0, T].
ExperimentReport kappa_convergence(const Profile& q0, double T,
                                   const std::vector<double>& kappas,
                                   const SchrodingerSolver& solver,
                                   const ExperimentOptions& opt = {});

/// kappa -> infinity limits of the symbol combinations built from g, with
/// log-log slopes over the sweep.
ExperimentReport symbol_convergence(const Profile& q,
                                    const std::vector<double>& kappas,
                                    const SchrodingerSolver& solver);

struct SmoothingParams {
  double center = 0.0;
  double width = 2.0;
  double T = 1.0;
  double dt = 2e-4;
  double snapshot_interval = 1.0 / 128.0;
  /// Frozen constant for the windowed-mass bound <= C delta^2.
  double window_constant = 6.0;
};

/// Space-time budget identity for the kappa = 1 density integrated against a
/// ramp weight, along a KdV trajectory on the line.
ExperimentReport local_smoothing_budget(const Profile& q0,
                                        const SmoothingParams& params,
                                        const SchrodingerSolver& solver);

/// q_lambda(t,x) = lambda^2 q(lambda^3 t, lambda x) consistency: the H^-1 norm
/// identity, alpha / g / rho transport, and the evolved-flow comparison.
ExperimentReport scaling_check(const Profile& q, double lambda, double kappa,
                               const SchrodingerSolver& solver,
                               const ExperimentOptions& opt = {});

/// Max relative drift of every invariant applicable to the flow, after
/// step-halving stabilization.
ExperimentReport conservation_drift(const FlowSpec& spec, const Profile& q0,
                                    double T, const SchrodingerSolver& solver);

}  // namespace kdvlab
