#include "fnls/potential.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fnls/errors.hpp"

namespace fnls {

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::GaussianWell:
      return "gaussian_well";
    case PotentialKind::GaussianBump:
      return "gaussian_bump";
    case PotentialKind::DoubleGaussian:
      return "double_gaussian";
  }
  return "unknown";
}

PotentialKind parse_potential_kind(const std::string& name) {
  if (name == "gaussian_well") return PotentialKind::GaussianWell;
  if (name == "gaussian_bump") return PotentialKind::GaussianBump;
  if (name == "double_gaussian") return PotentialKind::DoubleGaussian;
  throw ConfigError("potential: unknown kind '" + name + "'");
}

double PotentialSpec::amplitude(std::size_t i) const {
  return kind == PotentialKind::GaussianBump ? depths[i] : -depths[i];
}

PotentialSpec make_potential(PotentialKind kind, int dim, std::vector<Eigen::VectorXd> centers,
                             std::vector<double> depths, std::vector<double> widths, double base) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("potential: dimension must be 1, 2 or 3");
  if (centers.empty()) throw ConfigError("potential: at least one Gaussian term is required");
  if (centers.size() != depths.size() || centers.size() != widths.size()) {
    throw ConfigError("potential: centers, depths and widths must have equal length");
  }
  if (kind == PotentialKind::DoubleGaussian && centers.size() != 2) {
    throw ConfigError("potential: double_gaussian takes exactly two terms");
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i].size() != dim) throw ConfigError("potential: center has wrong dimension");
    if (!(widths[i] > 0.0)) throw ConfigError("potential: widths must be positive");
    if (!std::isfinite(depths[i]) || !centers[i].allFinite()) {
      throw ConfigError("potential: non-finite parameter");
    }
  }
  PotentialSpec spec;
  spec.kind = kind;
  spec.dim = dim;
  spec.centers = std::move(centers);
  spec.depths = std::move(depths);
  spec.widths = std::move(widths);
  spec.base = base;
  return spec;
}

double eval_potential(const PotentialSpec& spec, const Eigen::VectorXd& x) {
  double v = spec.base - spec.shift;
  for (std::size_t i = 0; i < spec.centers.size(); ++i) {
    const double w2 = spec.widths[i] * spec.widths[i];
    v += spec.amplitude(i) * std::exp(-(x - spec.centers[i]).squaredNorm() / w2);
  }
  return v;
}

Eigen::VectorXd grad_potential(const PotentialSpec& spec, const Eigen::VectorXd& x) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.dim);
  for (std::size_t i = 0; i < spec.centers.size(); ++i) {
    const double w2 = spec.widths[i] * spec.widths[i];
    const Eigen::VectorXd d = x - spec.centers[i];
    const double gauss = spec.amplitude(i) * std::exp(-d.squaredNorm() / w2);
    g += (-2.0 / w2) * gauss * d;
  }
  return g;
}

Eigen::MatrixXd hess_potential(const PotentialSpec& spec, const Eigen::VectorXd& x) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(spec.dim, spec.dim);
  for (std::size_t i = 0; i < spec.centers.size(); ++i) {
    const double w2 = spec.widths[i] * spec.widths[i];
    const Eigen::VectorXd d = x - spec.centers[i];
    const double gauss = spec.amplitude(i) * std::exp(-d.squaredNorm() / w2);
    h += gauss * ((4.0 / (w2 * w2)) * d * d.transpose() -
                  (2.0 / w2) * Eigen::MatrixXd::Identity(spec.dim, spec.dim));
  }
  // rounding in the outer products can break symmetry in the last bit
  return 0.5 * (h + h.transpose());
}

RealField rescaled_potential_field(const PotentialSpec& spec, const GridSpec& grid, double eps,
                                   const Eigen::VectorXd& z) {
  if (grid.dim != spec.dim || z.size() != spec.dim) {
    throw std::invalid_argument("rescaled_potential_field: dimension mismatch");
  }
  Eigen::VectorXd x(spec.dim);
  return RealField::sample(grid, [&](std::span<const double> y) {
    for (int a = 0; a < spec.dim; ++a) x[a] = eps * y[a] + z[a];
    return eval_potential(spec, x);
  });
}

PotentialSpec normalize_at_critical_point(const PotentialSpec& spec, const Eigen::VectorXd& z0,
                                          double check_radius) {
  if (z0.size() != spec.dim) throw ConfigError("potential: z0 has wrong dimension");

  double grad_scale = 1.0;
  for (std::size_t i = 0; i < spec.centers.size(); ++i) {
    grad_scale = std::max(grad_scale, std::abs(spec.depths[i]) / spec.widths[i]);
  }
  const double grad = grad_potential(spec, z0).norm();
  if (grad > 1e-12 * grad_scale) {
    throw ConfigError("potential: z0 is not a critical point (|grad V(z0)| = " +
                      std::to_string(grad) + ")");
  }
  const double det = hess_potential(spec, z0).determinant();
  if (!(std::abs(det) > 1e-8)) {
    throw ConfigError("potential: Hessian at z0 is degenerate (det = " + std::to_string(det) + ")");
  }

  PotentialSpec out = spec;
  out.shift = 0.0;
  out.shift = eval_potential(out, z0) - 1.0;
  out.z0 = z0;

  // Positivity on a lattice covering the checked box.
  const int per_axis = spec.dim == 1 ? 4097 : (spec.dim == 2 ? 257 : 65);
  const double step = 2.0 * check_radius / (per_axis - 1);
  Eigen::VectorXd x(spec.dim);
  std::vector<int> idx(spec.dim, 0);
  double vmin = eval_potential(out, z0);
  for (bool done = false; !done;) {
    for (int a = 0; a < spec.dim; ++a) x[a] = z0[a] - check_radius + step * idx[a];
    vmin = std::min(vmin, eval_potential(out, x));
    done = true;
    for (int a = spec.dim - 1; a >= 0; --a) {
      if (++idx[a] < per_axis) {
        done = false;
        break;
      }
      idx[a] = 0;
    }
  }
  if (!(vmin > 0.0)) {
    throw ConfigError("potential: normalized V is not positive (min " + std::to_string(vmin) +
                      " on the checked box)");
  }
  return out;
}

double derivative_bound(const PotentialSpec& spec, int order) {
  // sup_t |d^m/dt^m exp(-t^2)| for m = 0..3; mixed partials factor into
  // products of these, each at most the pure-order value.
  static constexpr double kGaussDerivSup[4] = {1.0, 0.8578, 2.0, 3.91};
  if (order < 0 || order > 3) throw std::invalid_argument("derivative_bound: order must be 0..3");
  double bound = order == 0 ? std::abs(spec.base - spec.shift) : 0.0;
  for (std::size_t i = 0; i < spec.centers.size(); ++i) {
    bound += std::abs(spec.depths[i]) * kGaussDerivSup[order] / std::pow(spec.widths[i], order);
  }
  return bound;
}

}  // namespace fnls
