// Bounded analytic potentials built from finite sums of Gaussians plus a
// constant, with exact gradient and Hessian.
//
//   V(x) = base - shift + sum_i a_i exp(-|x - c_i|^2 / w_i^2)
//
// where a_i = -depth_i for wells and +depth_i for bumps. Depths may carry
// either sign, so a "well" list can mix in small bumps.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fnls/grid.hpp"

namespace fnls {

enum class PotentialKind { GaussianWell, GaussianBump, DoubleGaussian };

std::string to_string(PotentialKind kind);
/// Accepts "gaussian_well", "gaussian_bump", "double_gaussian".
PotentialKind parse_potential_kind(const std::string& name);

struct PotentialSpec {
  PotentialKind kind = PotentialKind::GaussianWell;
  int dim = 1;
  std::vector<Eigen::VectorXd> centers;
  std::vector<double> depths;
  std::vector<double> widths;
  double base = 0.0;
  /// The absorbed energy E; set by normalize_at_critical_point.
  double shift = 0.0;
  /// Designated nondegenerate critical point; empty until normalized.
  Eigen::VectorXd z0;

  /// Signed Gaussian coefficient a_i.
  double amplitude(std::size_t i) const;
  bool normalized() const { return z0.size() == dim; }
};

/// Validates shapes (matching list lengths, positive widths, centers of
/// dimension `dim`, exactly two terms for double_gaussian). Throws ConfigError.
PotentialSpec make_potential(PotentialKind kind, int dim, std::vector<Eigen::VectorXd> centers,
                             std::vector<double> depths, std::vector<double> widths,
                             double base = 0.0);

double eval_potential(const PotentialSpec& spec, const Eigen::VectorXd& x);
Eigen::VectorXd grad_potential(const PotentialSpec& spec, const Eigen::VectorXd& x);
Eigen::MatrixXd hess_potential(const PotentialSpec& spec, const Eigen::VectorXd& x);

/// Samples y -> V(eps*y + z) on the grid.
RealField rescaled_potential_field(const PotentialSpec& spec, const GridSpec& grid, double eps,
                                   const Eigen::VectorXd& z);

/// Chooses the shift so that V(z0) = 1 and records z0.
///
/// Rejects (ConfigError) a z0 that is not a critical point (|grad V| above
/// 1e-12 relative to the gradient scale), a degenerate Hessian
/// (|det| <= 1e-8), and a shifted potential that is not positive on the box
/// z0 + [-check_radius, check_radius]^n.
PotentialSpec normalize_at_critical_point(const PotentialSpec& spec, const Eigen::VectorXd& z0,
                                          double check_radius = 10.0);

/// Analytic bound on sup |D^J V| over R^n for |J| = order (0..3).
double derivative_bound(const PotentialSpec& spec, int order);

}  // namespace fnls
