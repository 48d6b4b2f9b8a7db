#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "kdvlab/experiments.hpp"
#include "kdvlab/io.hpp"

using namespace kdvlab;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("identity suite passes on a seeded circle profile") {
  SchrodingerSolver solver;
  Profile q = seeded_profile(3, Geometry::Circle, 128, 1.0, 0.06);
  ExperimentReport rep = identity_suite(q, {2.0}, solver);
  for (const auto& e : rep.entries) {
    CAPTURE(e.name);
    CHECK(e.pass);
  }
  CHECK(rep.pass);
}

TEST_CASE("identity suite on the zero profile is all tiny") {
  SchrodingerSolver solver;
  Profile q = Profile::zeros(Geometry::Circle, 64, 1.0);
  ExperimentReport rep = identity_suite(q, {1.0}, solver);
  CHECK(rep.pass);
  for (const auto& e : rep.entries)
    if (e.relation == "<=") CHECK(e.value < 1e-8);
}

TEST_CASE("kappa convergence trends at a coarse setting") {
  // the low-frequency line box keeps the dispersion gap in the linear regime
  SchrodingerSolver solver;
  Profile q = Profile::from_function(Geometry::Line, 128, 8.0, [](double x) {
    return 0.08 * std::exp(-x * x / (2.0 * 0.55 * 0.55));
  });
  ExperimentOptions opt;
  opt.dt = 1e-3;
  ExperimentReport rep = kappa_convergence(q, 0.05, {2.0, 4.0}, solver, opt);
  for (const auto& e : rep.entries) {
    if (e.name.find("decreasing") != std::string::npos) CHECK(e.pass);
    if (e.name.find("factor2") != std::string::npos) CHECK(e.pass);
  }
  REQUIRE(rep.csv_rows.size() == 2);
  CHECK(rep.csv_rows[1][1] < rep.csv_rows[0][1]);
}

TEST_CASE("symbol convergence slopes near -2") {
  SchrodingerSolver solver;
  Profile q = Profile::from_function(Geometry::Circle, 128, 1.0, [](double x) {
    return 0.05 * std::cos(2.0 * kPi * x);
  });
  ExperimentReport rep = symbol_convergence(q, {4.0, 8.0, 16.0, 32.0}, solver);
  CHECK(rep.pass);
}

TEST_CASE("local smoothing budget on a short horizon") {
  SchrodingerSolver solver;
  Profile q = Profile::from_function(Geometry::Line, 256, 40.0, [](double x) {
    return 0.08 * std::exp(-x * x / 8.0);
  });
  SmoothingParams p;
  p.T = 0.25;
  p.dt = 2e-4;
  p.snapshot_interval = 0.25 / 128.0;
  ExperimentReport rep = local_smoothing_budget(q, p, solver);
  for (const auto& e : rep.entries) {
    CAPTURE(e.name);
    CHECK(e.pass);
  }
}

TEST_CASE("scaling check on a line bump") {
  SchrodingerSolver solver;
  Profile q = Profile::from_function(Geometry::Line, 256, 40.0, [](double x) {
    return 0.04 * std::exp(-0.5 * x * x);
  });
  ExperimentReport rep = scaling_check(q, 2.0, 4.0, solver);
  for (const auto& e : rep.entries) {
    CAPTURE(e.name);
    CAPTURE(e.value);
    CHECK(e.pass);
  }
}

TEST_CASE("conservation drift harness on kdv") {
  SchrodingerSolver solver;
  Profile q = Profile::from_function(Geometry::Circle, 64, 1.0, [](double x) {
    return 0.05 * std::cos(2.0 * kPi * x) + 0.01 * std::cos(4.0 * kPi * x);
  });
  FlowSpec spec{.hamiltonian = Hamiltonian::Kdv, .dt = 2e-4};
  ExperimentReport rep = conservation_drift(spec, q, 0.2, solver);
  for (const auto& e : rep.entries) {
    CAPTURE(e.name);
    CAPTURE(e.value);
    CHECK(e.pass);
  }
}

TEST_CASE("reports are byte-identical across reruns") {
  SchrodingerSolver solver;
  Profile q = Profile::from_function(Geometry::Circle, 64, 1.0, [](double x) {
    return 0.05 * std::cos(2.0 * kPi * x);
  });
  ExperimentReport a = symbol_convergence(q, {4.0, 8.0}, solver);
  ExperimentReport b = symbol_convergence(q, {4.0, 8.0}, solver);
  CHECK(a.to_csv() == b.to_csv());
  // runtime differs; compare everything else
  auto ja = a.to_json();
  auto jb = b.to_json();
  ja.erase("runtime_seconds");
  jb.erase("runtime_seconds");
  CHECK(ja == jb);
}

TEST_CASE("profile and solve serialization round-trips") {
  SchrodingerSolver solver;
  Profile q = seeded_profile(9, Geometry::Circle, 64, 1.0, 0.05);
  io::write_profile("/tmp/kdvlab_prof.json", q);
  Profile back = io::read_profile("/tmp/kdvlab_prof.json");
  for (std::size_t j = 0; j < q.size(); ++j)
    CHECK(back.samples()[j] == q.samples()[j]);  // 17 digits: exact

  SchrodingerSolve s = solver.solve(q, 2.0);
  auto j = io::solve_to_json(s);
  CHECK(j["kappa"] == 2.0);
  CHECK(j["route"] == "weyl");
  CHECK(j["g"].size() == q.size());
  CHECK(j.contains("gamma"));

  auto b = io::breakdown_to_json(invariant_breakdown(q, 2.0, solver));
  CHECK(b.contains("alpha_density"));
  CHECK(b.contains("alpha_floquet"));
  CHECK(b.contains("alpha_det2"));
  CHECK(b["hamiltonians"].contains("h_5th_kappa"));
}
