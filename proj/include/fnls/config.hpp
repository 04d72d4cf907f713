// Run configuration: JSON file plus command-line overrides, validated in one
// pass so every violation is reported together.
#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fnls/grid.hpp"
#include "fnls/potential.hpp"
#include "json.hpp"

namespace fnls {

struct SolverConfig {
  double tol_ground = 1e-10;
  double tol_fixed = 1e-9;
  double tol_root = 1e-8;
  int max_iter = 2000;
  std::optional<double> nu;
  double eps_max = 0.25;
  double z_radius = 0.5;
};

struct StudyConfig {
  std::vector<double> eps_list{0.2, 0.14, 0.1, 0.07};
  Eigen::VectorXd z_init;  // defaults to potential z0
};

struct OutputConfig {
  std::string directory = ".";
  std::vector<std::string> formats{"fnsf", "json", "csv"};
};

struct PotentialConfig {
  std::string kind = "gaussian_well";
  std::vector<Eigen::VectorXd> centers;
  std::vector<double> depths;
  std::vector<double> widths;
  Eigen::VectorXd z0;
  double base = 2.0;
};

struct RunConfig {
  GridSpec grid;
  double s = 0.0;
  double alpha = 0.0;
  std::optional<PotentialConfig> potential;
  SolverConfig solver;
  StudyConfig study;
  OutputConfig output;
  /// Fully resolved config (defaults filled, overrides applied), embedded in
  /// every output file.
  nlohmann::json resolved;

  /// Builds and normalizes the potential; requires `potential`.
  PotentialSpec potential_spec() const;
};

/// Flag values that win over the file.
struct ConfigOverrides {
  std::optional<double> eps;              // replaces eps_list with {eps}
  std::optional<std::vector<double>> z0;  // potential z0 (and the default z_init)
  std::optional<std::string> out;         // output directory
};

/// Verbs that run the reduction need the potential and the stricter
/// (s, alpha) range.
bool verb_needs_reduction(const std::string& verb);

/// Parses and validates. Throws ConfigError carrying every violation.
RunConfig parse_and_validate(const nlohmann::json& doc, const std::string& verb,
                             const ConfigOverrides& overrides = {});
RunConfig parse_and_validate(const std::filesystem::path& path, const std::string& verb,
                             const ConfigOverrides& overrides = {});

}  // namespace fnls
