#include "kdvlab/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "kdvlab/errors.hpp"

namespace kdvlab::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp + " for writing");
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ConfigError("cannot rename " + tmp + " to " + path);
}

json profile_to_json(const Profile& p) {
  json j;
  j["geometry"] = p.geometry() == Geometry::Circle ? "circle" : "line";
  j["n"] = p.size();
  j["length"] = p.period();
  j["samples"] = p.samples();
  return j;
}

Profile profile_from_json(const json& j) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "geometry" && key != "n" && key != "length" && key != "samples")
      throw ConfigError("profile json: unknown key '" + key + "'");
  }
  if (!j.contains("geometry") || !j.contains("n") || !j.contains("length") ||
      !j.contains("samples"))
    throw ConfigError("profile json: geometry, n, length, samples required");
  const std::string geo = j["geometry"].get<std::string>();
  if (geo != "circle" && geo != "line")
    throw ConfigError("profile json: geometry must be 'circle' or 'line'");
  return Profile(geo == "circle" ? Geometry::Circle : Geometry::Line,
                 j["n"].get<std::size_t>(), j["length"].get<double>(),
                 j["samples"].get<std::vector<double>>());
}

void write_profile(const std::string& path, const Profile& p) {
  std::ostringstream out;
  out << "{\"geometry\":\""
      << (p.geometry() == Geometry::Circle ? "circle" : "line")
      << "\",\"n\":" << p.size() << ",\"length\":" << format_double(p.period())
      << ",\"samples\":[";
  for (std::size_t i = 0; i < p.samples().size(); ++i) {
    if (i) out << ',';
    out << format_double(p.samples()[i]);
  }
  out << "]}\n";
  atomic_write(path, out.str());
}

Profile read_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("profile file " + path + ": " + e.what());
  }
  return profile_from_json(j);
}

json solve_to_json(const SchrodingerSolve& s) {
  json j;
  j["kappa"] = s.kappa;
  if (s.has_floquet) j["gamma"] = s.gamma;
  j["g"] = s.g.samples();
  j["route"] = s.route == GreensRoute::Weyl ? "weyl" : "resolvent";
  return j;
}

json breakdown_to_json(const InvariantBreakdown& b) {
  json j;
  j["kappa"] = b.kappa;
  j["rho"] = b.rho.samples();
  j["alpha_density"] = b.alpha_density;
  if (b.alpha_floquet) j["alpha_floquet"] = *b.alpha_floquet;
  if (b.alpha_det2) j["alpha_det2"] = *b.alpha_det2;
  if (b.det_identity_residual)
    j["det_identity_residual"] = *b.det_identity_residual;
  j["cross_discrepancy"] = b.cross_discrepancy;
  j["hamiltonians"] = {{"mass", b.hamiltonians.mass},
                       {"momentum", b.hamiltonians.momentum},
                       {"h_kdv", b.hamiltonians.h_kdv},
                       {"h_kappa", b.hamiltonians.h_kappa},
                       {"h_5th", b.hamiltonians.h_5th},
                       {"h_5th_kappa", b.hamiltonians.h_5th_kappa}};
  return j;
}

std::string sweep_csv(const std::vector<double>& kappas,
                      const std::vector<InvariantBreakdown>& rows,
                      const std::vector<EquicontinuityPoint>& curve) {
  if (kappas.size() != rows.size() || kappas.size() != curve.size())
    throw UsageError("sweep_csv: mismatched row counts");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream out;
  out << "kappa,alpha_density,alpha_floquet,alpha_det2,kappa_alpha,comparison\n";
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    out << format_double(kappas[i]) << ','
        << format_double(rows[i].alpha_density) << ','
        << format_double(rows[i].alpha_floquet.value_or(nan)) << ','
        << format_double(rows[i].alpha_det2.value_or(nan)) << ','
        << format_double(curve[i].kappa_alpha) << ','
        << format_double(curve[i].comparison) << '\n';
  }
  return out.str();
}

}  // namespace kdvlab::io
