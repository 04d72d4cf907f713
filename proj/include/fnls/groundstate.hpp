// Ground state of (-Delta)^s u + u = |u|^alpha u on the periodic grid, by
// Petviashvili iteration, plus the structural diagnostics that go with it
// (centering, tail exponent, GNS quotient).
#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "fnls/grid.hpp"

namespace fnls {

struct AdmissibleRange {
  /// 4s/(n-2s) for s < n/2, +inf otherwise.
  double alpha_max = std::numeric_limits<double>::infinity();
  /// max(1/2, n/4): lower bound on s for the reduction.
  double s_min = 0.5;
  /// Open interval for the blow-up exponent nu of the scaled reduced map.
  double nu_lower = 1.0 / 3.0;
  double nu_upper = 1.0;
  /// s_min < s < 1.
  bool reduction_admissible = false;

  double nu_midpoint() const { return 0.5 * (nu_lower + nu_upper); }
  bool nu_nonempty() const { return nu_upper > nu_lower; }
};

AdmissibleRange admissible_range(int n, double s);

/// Throws AdmissibilityError unless s in (0,1) and 0 < alpha < alpha_max.
void require_limit_admissible(int n, double s, double alpha);

/// S0(u) = (-Delta)^s u + u - |u|^alpha u.
RealField limit_residual(const RealField& u, double s, double alpha);

struct PetviashviliStep {
  RealField next;
  /// <((-Delta)^s + 1) u, u> / <|u|^alpha u, u>; equals 1 at a solution.
  double stabilizer = 0.0;
};

PetviashviliStep petviashvili_step(const RealField& u, double s, double alpha);

struct GroundStateOptions {
  double tol = 1e-10;  // on ||S0(u)||_0 / ||u||_0
  int max_iter = 2000;
};

struct DecayFit {
  double slope = 0.0;
  bool super_polynomial = false;
  std::size_t samples = 0;
  /// min/max of u(r) (1 + r^p) over the window, p = -slope of the fit.
  double c_lower = 0.0;
  double c_upper = 0.0;
};

struct GroundState {
  RealField profile;
  double s = 0.0;
  double alpha = 0.0;
  double residual = 0.0;  // ||S0(u0)||_0
  double mass = 0.0;      // ||u0||_0^2
  std::vector<RealField> kernel_fields;  // d_j u0
  double decay_slope = 0.0;
  DecayFit decay;
  int iterations = 0;
  std::vector<double> stabilizer_history;  // |M - 1| per iteration

  const GridSpec& grid() const { return profile.grid(); }
};

/// Unit-height Gaussian exp(-|x|^2).
RealField gaussian_guess(const GridSpec& g);

/// Runs Petviashvili until ||S0(u)||_0 <= tol ||u||_0, then centers and fills
/// in diagnostics. Throws AdmissibilityError for (n, s, alpha) outside the
/// limit-equation range and SolverError on non-convergence.
GroundState compute_ground_state(const GridSpec& grid, double s, double alpha,
                                 const RealField& init, const GroundStateOptions& options = {});

/// Builds the diagnostics of an already converged profile (e.g. one read
/// back from disk) without iterating.
GroundState ground_state_from_profile(RealField profile, double s, double alpha);

/// Translates u so its mass centroid (int x u^2 / int u^2) is within h/100 of
/// the origin. Throws std::invalid_argument for a zero field.
RealField center_profile(const RealField& u);

/// Mass centroid of u^2.
Eigen::VectorXd mass_centroid(const RealField& u);

/// Least-squares slope of log(radial average of u) against log r on
/// [r_min, r_max]. Throws std::invalid_argument for fewer than 8 radial
/// samples or r_max > L/2.
DecayFit decay_exponent_fit(const RealField& u, double r_min, double r_max);

/// Default fit window: [min(10, L/8), L/4].
DecayFit default_decay_fit(const RealField& u);

/// Radially averaged profile in shells of width h: (r, mean u).
std::vector<std::pair<double, double>> radial_average(const RealField& u);

/// J(u) = ||(-Delta)^(s/2) u||^(n alpha/(2s)) ||u||^(alpha+2-n alpha/(2s)) / int |u|^(alpha+2).
double gns_quotient(const RealField& u, double s, double alpha);

/// u0(y - z/eps); throws std::invalid_argument when |z|/eps >= L/2.
RealField translate_profile(const GroundState& g, const Eigen::VectorXd& z, double eps);

}  // namespace fnls
