#pragma once

#include <nlohmann/json_fwd.hpp>

#include <string>

#include "kdvlab/invariants.hpp"
#include "kdvlab/profile.hpp"
#include "kdvlab/schrodinger.hpp"

namespace kdvlab::io {

/// Shortest round-trip-exact decimal form (17 significant digits).
std::string format_double(double v);

/// Writes via a temp file in the same directory, then renames.
void atomic_write(const std::string& path, const std::string& content);

nlohmann::json profile_to_json(const Profile& p);
Profile profile_from_json(const nlohmann::json& j);
void write_profile(const std::string& path, const Profile& p);
Profile read_profile(const std::string& path);

nlohmann::json solve_to_json(const SchrodingerSolve& s);
nlohmann::json breakdown_to_json(const InvariantBreakdown& b);

/// "kappa,alpha_density,alpha_floquet,alpha_det2,kappa_alpha,comparison" rows.
std::string sweep_csv(const std::vector<double>& kappas,
                      const std::vector<InvariantBreakdown>& rows,
                      const std::vector<EquicontinuityPoint>& curve);

}  // namespace kdvlab::io
