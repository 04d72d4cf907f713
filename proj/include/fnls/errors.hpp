#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fnls {

/// Invalid user-facing configuration (bad grid, potential, or model parameters).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
  ConfigError(const std::string& summary, std::vector<std::string> violations)
      : std::runtime_error(summary), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// (n, s, alpha) outside the range where the requested computation is meaningful.
class AdmissibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver failed to reach its tolerance. `achieved` is the last
/// residual (or step) the solver reached.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double achieved, int iterations)
      : std::runtime_error(what), achieved_(achieved), iterations_(iterations) {}

  double achieved() const { return achieved_; }
  int iterations() const { return iterations_; }

 private:
  double achieved_;
  int iterations_;
};

}  // namespace fnls
