#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kdvlab/errors.hpp"
#include "kdvlab/experiments.hpp"
#include "kdvlab/flows.hpp"
#include "kdvlab/invariants.hpp"
#include "kdvlab/io.hpp"
#include "kdvlab/profile.hpp"
#include "kdvlab/schrodinger.hpp"

using namespace kdvlab;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOpts {
  std::string out;
  std::string config_path;
  unsigned jobs = 0;
  double delta_admiss = 0.1;
  double gamma_tol = 1e-12;
};

json load_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw ConfigError(std::string("cannot open config ") + argv[i + 1]);
      json j;
      in >> j;
      if (!j.is_object()) throw ConfigError("config must be a JSON object");
      return j;
    }
  return json::object();
}

// Config values act as defaults; explicit flags win.  Unknown keys reject.
void apply_config(const json& cfg, CLI::App* sub) {
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw ConfigError("config: unknown key '" + key + "' for subcommand " +
                        sub->get_name());
    if (opt->count() > 0) continue;  // explicit flag wins
    std::stringstream ss;
    if (value.is_string())
      ss << value.get<std::string>();
    else if (value.is_array()) {
      bool first = true;
      for (const auto& v : value) {
        if (!first) ss << ',';
        first = false;
        ss << v.dump();
      }
    } else
      ss << value.dump();
    opt->add_result(ss.str());
  }
}

std::string out_dir(const CommonOpts& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("KDVLAB_OUT")) return env;
  return ".";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
}

std::vector<double> parse_kappas(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw ConfigError("empty kappa list");
  return out;
}

Hamiltonian parse_hamiltonian(const std::string& name) {
  if (name == "kdv") return Hamiltonian::Kdv;
  if (name == "hk") return Hamiltonian::Hk;
  if (name == "diff") return Hamiltonian::Diff;
  if (name == "fifth") return Hamiltonian::Fifth;
  if (name == "fifth_hk") return Hamiltonian::FifthHk;
  if (name == "fifth_diff") return Hamiltonian::FifthDiff;
  throw ConfigError("unknown hamiltonian '" + name + "'");
}

void write_trajectory(const std::string& dir, const Trajectory& traj) {
  std::ostringstream out;
  json header = {
      {"hamiltonian", hamiltonian_name(traj.spec.hamiltonian)},
      {"kappa", traj.spec.kappa},
      {"dt", traj.spec.dt},
      {"T", traj.spec.T},
      {"snapshot_interval", traj.spec.snapshot_interval},
      {"completed", traj.completed}};
  if (!traj.failure.empty()) header["failure"] = traj.failure;
  out << header.dump() << '\n';
  for (const auto& snap : traj.snapshots) {
    out << io::format_double(snap.t);
    for (double v : snap.q.samples()) out << ',' << io::format_double(v);
    out << '\n';
  }
  io::atomic_write(dir + "/trajectory.csv", out.str());

  std::ostringstream diag;
  diag << "t,mass,momentum,h_kdv";
  for (std::size_t i = 0; i < traj.spec.diag_kappas.size(); ++i)
    diag << ",alpha_" << io::format_double(traj.spec.diag_kappas[i]);
  diag << '\n';
  for (const auto& row : traj.diagnostics) {
    diag << io::format_double(row.t) << ',' << io::format_double(row.mass)
         << ',' << io::format_double(row.momentum) << ','
         << io::format_double(row.h_kdv);
    for (double a : row.alphas) diag << ',' << io::format_double(a);
    diag << '\n';
  }
  io::atomic_write(dir + "/diagnostics.csv", diag.str());
}

int report_exit(const ExperimentReport& rep, const std::string& dir) {
  ensure_dir(dir);
  rep.write(dir);
  for (const auto& e : rep.entries)
    std::cout << (e.relation == "info" ? "[info]"
                                       : (e.pass ? "[pass]" : "[FAIL]"))
              << ' ' << e.name << " = " << io::format_double(e.value)
              << (e.relation == "info"
                      ? ""
                      : " (" + e.relation + " " +
                            io::format_double(e.threshold) + ")")
              << '\n';
  std::cout << rep.name << ": " << (rep.pass ? "PASS" : "FAIL") << " ("
            << rep.runtime_seconds << " s)\n";
  return rep.pass ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kdvlab: integrability diagnostics for KdV-type flows"};
  app.require_subcommand(1);

  CommonOpts common;
  json cfg;
  try {
    cfg = load_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--config", common.config_path, "JSON config file");
    sub->add_option("--jobs", common.jobs, "parallel workers (0 = cores)");
    sub->add_option("--delta-admiss", common.delta_admiss,
                    "admissibility threshold delta");
    sub->add_option("--gamma-tol", common.gamma_tol,
                    "Floquet exponent refinement tolerance");
  };

  // ---- gen
  auto* gen = app.add_subcommand("gen", "generate a seeded profile");
  std::uint64_t seed = 0;
  std::size_t n = 256;
  std::string geometry = "circle";
  double length = 1.0, target = 0.05, decay = 4.0;
  std::size_t band = 0;
  std::string gen_out_file = "profile.json";
  gen->add_option("--seed", seed, "RNG seed")->required();
  gen->add_option("--n", n, "grid size (power of two)");
  gen->add_option("--geometry", geometry, "circle | line");
  gen->add_option("--length", length, "period (1 for circle, 2L for line)");
  gen->add_option("--target-norm", target, "target H^{-1} norm");
  gen->add_option("--decay", decay, "spectral decay exponent");
  gen->add_option("--band", band, "highest excited mode (0 = n/8)");
  gen->add_option("--file", gen_out_file, "output file name");
  add_common(gen);

  // ---- alpha
  auto* alpha_cmd = app.add_subcommand("alpha", "invariant breakdown for (q, kappa)");
  std::string profile_path;
  std::string kappas_csv = "1";
  alpha_cmd->add_option("--profile", profile_path, "profile JSON")->required();
  alpha_cmd->add_option("--kappa", kappas_csv, "kappa or comma list");
  alpha_cmd->add_option("--kappas", kappas_csv, "kappa list (alias)");
  add_common(alpha_cmd);

  // ---- identities
  auto* ident = app.add_subcommand("identities", "pointwise identity suite");
  std::string ident_kappas = "2,4";
  ident->add_option("--profile", profile_path, "profile JSON")->required();
  ident->add_option("--kappas", ident_kappas, "kappa list");
  add_common(ident);

  // ---- flow
  auto* flow = app.add_subcommand("flow", "evolve a profile");
  std::string hname = "kdv";
  double kappa_flow = 2.0, T = 1.0, dt = 1e-3, snap = 0.0;
  std::string stepper = "default";
  flow->add_option("--profile", profile_path, "profile JSON")->required();
  flow->add_option("--hamiltonian", hname,
                   "kdv|hk|diff|fifth|fifth_hk|fifth_diff");
  flow->add_option("--kappa", kappa_flow, "flow kappa");
  flow->add_option("--T", T, "horizon");
  flow->add_option("--dt", dt, "time step");
  flow->add_option("--snapshot-interval", snap, "snapshot cadence (0 = T/64)");
  flow->add_option("--stepper", stepper, "default|etd4|rk4_if");
  add_common(flow);

  // ---- converge
  auto* conv = app.add_subcommand("converge", "kappa -> infinity flow approximation");
  std::string conv_kappas = "4,8,16,32";
  double conv_T = 0.25, conv_dt = 1e-3;
  conv->add_option("--profile", profile_path, "profile JSON")->required();
  conv->add_option("--kappas", conv_kappas, "kappa list");
  conv->add_option("--T", conv_T, "horizon");
  conv->add_option("--dt", conv_dt, "time step");
  add_common(conv);

  // ---- symbols
  auto* symb = app.add_subcommand("symbols", "symbol convergence sweep");
  std::string symb_kappas = "4,8,16,32";
  symb->add_option("--profile", profile_path, "profile JSON")->required();
  symb->add_option("--kappas", symb_kappas, "kappa list");
  add_common(symb);

  // ---- smoothing
  auto* smoo = app.add_subcommand("smoothing", "local smoothing budget (line)");
  SmoothingParams sp;
  smoo->add_option("--profile", profile_path, "profile JSON")->required();
  smoo->add_option("--T", sp.T, "horizon");
  smoo->add_option("--dt", sp.dt, "time step");
  smoo->add_option("--center", sp.center, "ramp center");
  smoo->add_option("--width", sp.width, "ramp width");
  smoo->add_option("--cadence", sp.snapshot_interval, "snapshot cadence");
  add_common(smoo);

  // ---- scaling
  auto* scal = app.add_subcommand("scaling", "q_lambda scaling identities (line)");
  double lambda = 2.0, kappa_scal = 4.0;
  scal->add_option("--profile", profile_path, "profile JSON")->required();
  scal->add_option("--lambda", lambda, "scaling factor");
  scal->add_option("--kappa", kappa_scal, "kappa for the alpha/g identities");
  add_common(scal);

  try {
    for (auto* sub : app.get_subcommands({})) (void)sub;
    app.parse(argc, argv);
    CLI::App* active = app.get_subcommands().front();
    apply_config(cfg, active);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    SolverOptions sopt;
    sopt.gamma_tol = common.gamma_tol;
    sopt.delta_admiss = common.delta_admiss;
    SchrodingerSolver solver(sopt);
    ExperimentOptions eopt;
    eopt.jobs = common.jobs;
    const std::string dir = out_dir(common);

    if (gen->parsed()) {
      Geometry geo = geometry == "line" ? Geometry::Line : Geometry::Circle;
      if (geometry != "line" && geometry != "circle")
        throw ConfigError("geometry must be circle or line");
      Profile p = seeded_profile(seed, geo, n, length, target, decay, band);
      ensure_dir(dir);
      io::write_profile(dir + "/" + gen_out_file, p);
      std::cout << "wrote " << dir << "/" << gen_out_file << " (||q||_{H^-1} = "
                << io::format_double(p.sobolev_norm(-1.0, 1.0)) << ")\n";
      return kExitPass;
    }

    Profile q = io::read_profile(profile_path);

    if (alpha_cmd->parsed()) {
      std::vector<double> ks = parse_kappas(kappas_csv);
      std::vector<InvariantBreakdown> rows;
      for (double k : ks) rows.push_back(invariant_breakdown(q, k, solver));
      auto curve = equicontinuity_profile(q, ks, solver);
      ensure_dir(dir);
      json out = json::array();
      for (const auto& b : rows) out.push_back(io::breakdown_to_json(b));
      io::atomic_write(dir + "/alpha.report.json", out.dump(2) + "\n");
      io::atomic_write(dir + "/alpha.csv", io::sweep_csv(ks, rows, curve));
      for (std::size_t i = 0; i < ks.size(); ++i)
        std::cout << "kappa = " << ks[i]
                  << "  alpha = " << io::format_double(rows[i].alpha_density)
                  << "  cross = " << io::format_double(rows[i].cross_discrepancy)
                  << '\n';
      return kExitPass;
    }
    if (ident->parsed())
      return report_exit(identity_suite(q, parse_kappas(ident_kappas), solver, eopt), dir);
    if (flow->parsed()) {
      FlowSpec spec;
      spec.hamiltonian = parse_hamiltonian(hname);
      spec.kappa = kappa_flow;
      spec.T = T;
      spec.dt = dt;
      spec.snapshot_interval = snap;
      if (stepper == "etd4")
        spec.stepper = Stepper::Etd4;
      else if (stepper == "rk4_if")
        spec.stepper = Stepper::Rk4If;
      else if (stepper != "default")
        throw ConfigError("unknown stepper '" + stepper + "'");
      Trajectory traj = evolve(q, spec, solver);
      ensure_dir(dir);
      write_trajectory(dir, traj);
      std::cout << "trajectory: " << traj.snapshots.size() << " snapshots"
                << (traj.completed ? "" : "  [FAILED: " + traj.failure + "]")
                << '\n';
      return traj.completed ? kExitPass : kExitNumerical;
    }
    if (conv->parsed()) {
      ExperimentOptions o = eopt;
      o.dt = conv_dt;
      return report_exit(
          kappa_convergence(q, conv_T, parse_kappas(conv_kappas), solver, o), dir);
    }
    if (symb->parsed())
      return report_exit(symbol_convergence(q, parse_kappas(symb_kappas), solver), dir);
    if (smoo->parsed())
      return report_exit(local_smoothing_budget(q, sp, solver), dir);
    if (scal->parsed())
      return report_exit(scaling_check(q, lambda, kappa_scal, solver, eopt), dir);
    std::cerr << "no subcommand\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
