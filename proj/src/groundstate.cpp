#include "fnls/groundstate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "fnls/errors.hpp"
#include "fnls/fracops.hpp"

namespace fnls {

AdmissibleRange admissible_range(int n, double s) {
  AdmissibleRange r;
  const double dn = n;
  r.alpha_max = s < dn / 2.0 ? 4.0 * s / (dn - 2.0 * s) : std::numeric_limits<double>::infinity();
  r.s_min = std::max(0.5, dn / 4.0);
  const double m = dn + 4.0 * s;
  r.nu_lower = 1.0 / 3.0;
  r.nu_upper = std::min((3.0 * m - 4.0) / (m + 4.0), (2.0 * m - 2.0) / (m + 2.0));
  r.reduction_admissible = s > r.s_min && s < 1.0;
  return r;
}

void require_limit_admissible(int n, double s, double alpha) {
  if (!(s > 0.0 && s < 1.0)) {
    throw AdmissibilityError("ground state: s must lie in (0, 1), got " + std::to_string(s));
  }
  const auto range = admissible_range(n, s);
  if (!(alpha > 0.0 && alpha < range.alpha_max)) {
    throw AdmissibilityError("ground state: alpha must lie in (0, alpha_*) with alpha_* = " +
                             std::to_string(range.alpha_max) + ", got " + std::to_string(alpha));
  }
}

namespace {

RealField power_nonlinearity(const RealField& u, double alpha) {
  return transform_values(u, [alpha](double v) { return std::pow(std::abs(v), alpha) * v; });
}

}  // namespace

RealField limit_residual(const RealField& u, double s, double alpha) {
  RealField r = frac_laplacian(u, s);
  r += u;
  r -= power_nonlinearity(u, alpha);
  return r;
}

PetviashviliStep petviashvili_step(const RealField& u, double s, double alpha) {
  const RealField nl = power_nonlinearity(u, alpha);
  const double numerator =
      spectral_quadratic_form(u, [s](double k2) { return std::pow(k2, s) + 1.0; });
  const double denominator = l2_inner(nl, u);
  if (!(denominator > 0.0) || !(numerator > 0.0)) {
    throw std::invalid_argument("petviashvili_step: degenerate input (zero denominator)");
  }
  const double m = numerator / denominator;
  const double gamma = (alpha + 1.0) / alpha;
  RealField next = resolvent_multiplier(nl, s);
  next *= std::pow(m, gamma);
  return {std::move(next), m};
}

RealField gaussian_guess(const GridSpec& g) {
  return RealField::sample(g, [](std::span<const double> x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return std::exp(-r2);
  });
}

GroundState compute_ground_state(const GridSpec& grid, double s, double alpha,
                                 const RealField& init, const GroundStateOptions& options) {
  require_limit_admissible(grid.dim, s, alpha);
  require_same_grid(grid, init.grid(), "compute_ground_state");

  RealField u = init;
  std::vector<double> history;
  double rel = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < options.max_iter) {
    auto step = petviashvili_step(u, s, alpha);
    u = std::move(step.next);
    history.push_back(std::abs(step.stabilizer - 1.0));
    ++it;
    rel = l2_norm(limit_residual(u, s, alpha)) / l2_norm(u);
    if (!std::isfinite(rel)) break;
    if (rel <= options.tol) break;
  }
  if (!(rel <= options.tol)) {
    throw SolverError("ground state: Petviashvili iteration did not converge (relative residual " +
                          std::to_string(rel) + ")",
                      rel, it);
  }

  GroundState g = ground_state_from_profile(center_profile(u), s, alpha);
  g.iterations = it;
  g.stabilizer_history = std::move(history);
  return g;
}

GroundState ground_state_from_profile(RealField profile, double s, double alpha) {
  GroundState g;
  g.s = s;
  g.alpha = alpha;
  g.residual = l2_norm(limit_residual(profile, s, alpha));
  g.mass = l2_inner(profile, profile);
  for (int j = 0; j < profile.grid().dim; ++j) g.kernel_fields.push_back(partial_derivative(profile, j));
  try {
    g.decay = default_decay_fit(profile);
    g.decay_slope = g.decay.slope;
  } catch (const std::invalid_argument&) {
    g.decay_slope = std::numeric_limits<double>::quiet_NaN();
  }
  g.profile = std::move(profile);
  return g;
}

Eigen::VectorXd mass_centroid(const RealField& u) {
  const GridSpec& g = u.grid();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(g.dim);
  double mass = 0.0;
  for (std::size_t flat = 0; flat < u.size(); ++flat) {
    const double w = u[flat] * u[flat];
    const auto idx = unravel(g, flat);
    for (int a = 0; a < g.dim; ++a) c[a] += w * g.node(idx[a]);
    mass += w;
  }
  if (!(mass > 0.0)) throw std::invalid_argument("mass_centroid: zero mass");
  return c / mass;
}

RealField center_profile(const RealField& u) {
  const double tol = u.grid().spacing() / 100.0;
  RealField out = u;
  for (int pass = 0; pass < 8; ++pass) {
    const Eigen::VectorXd c = mass_centroid(out);
    if (c.cwiseAbs().maxCoeff() < tol) return out;
    const Eigen::VectorXd shift = -c;
    out = translate(out, std::span<const double>(shift.data(), static_cast<std::size_t>(shift.size())));
  }
  return out;
}

std::vector<std::pair<double, double>> radial_average(const RealField& u) {
  const GridSpec& g = u.grid();
  const double h = g.spacing();
  std::map<long, std::pair<double, std::pair<double, long>>> bins;  // b -> (sum r, (sum u, count))
  for (std::size_t flat = 0; flat < u.size(); ++flat) {
    const auto idx = unravel(g, flat);
    double r2 = 0.0;
    for (int a = 0; a < g.dim; ++a) r2 += g.node(idx[a]) * g.node(idx[a]);
    const double r = std::sqrt(r2);
    if (r > g.half_width) continue;
    const long b = std::lround(r / h);
    auto& bin = bins[b];
    bin.first += r;
    bin.second.first += u[flat];
    bin.second.second += 1;
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(bins.size());
  for (const auto& [b, bin] : bins) {
    const double count = static_cast<double>(bin.second.second);
    out.emplace_back(bin.first / count, bin.second.first / count);
  }
  return out;
}

namespace {

double fit_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

DecayFit decay_exponent_fit(const RealField& u, double r_min, double r_max) {
  const GridSpec& g = u.grid();
  if (!(r_min > 0.0) || !(r_max > r_min)) {
    throw std::invalid_argument("decay_exponent_fit: need 0 < r_min < r_max");
  }
  if (r_max > g.half_width / 2.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("decay_exponent_fit: r_max exceeds L/2");
  }
  std::vector<std::pair<double, double>> window;
  for (const auto& p : radial_average(u)) {
    if (p.first >= r_min && p.first <= r_max) window.push_back(p);
  }
  if (window.size() < 8) {
    throw std::invalid_argument("decay_exponent_fit: fewer than 8 radial samples in window");
  }

  DecayFit fit;
  fit.samples = window.size();
  std::vector<double> lx, ly;
  for (const auto& [r, v] : window) {
    if (!(v > 0.0) || !std::isfinite(std::log(v))) {
      fit.slope = -std::numeric_limits<double>::infinity();
      fit.super_polynomial = true;
      return fit;
    }
    lx.push_back(std::log(r));
    ly.push_back(std::log(v));
  }
  fit.slope = fit_slope(lx, ly);

  // Local slopes over the first and last thirds: a power law keeps them
  // equal, a faster-than-polynomial tail steepens.
  const std::size_t third = std::max<std::size_t>(lx.size() / 3, 3);
  const std::vector<double> lx_head(lx.begin(), lx.begin() + third);
  const std::vector<double> ly_head(ly.begin(), ly.begin() + third);
  const std::vector<double> lx_tail(lx.end() - third, lx.end());
  const std::vector<double> ly_tail(ly.end() - third, ly.end());
  const double head = fit_slope(lx_head, ly_head);
  const double tail = fit_slope(lx_tail, ly_tail);
  fit.super_polynomial = head < 0.0 && tail < 0.0 && tail / head > 1.5;

  const double p = -fit.slope;
  fit.c_lower = std::numeric_limits<double>::infinity();
  fit.c_upper = 0.0;
  for (const auto& [r, v] : window) {
    const double c = v * (1.0 + std::pow(r, p));
    fit.c_lower = std::min(fit.c_lower, c);
    fit.c_upper = std::max(fit.c_upper, c);
  }
  return fit;
}

DecayFit default_decay_fit(const RealField& u) {
  const double L = u.grid().half_width;
  return decay_exponent_fit(u, std::min(10.0, L / 8.0), L / 4.0);
}

double gns_quotient(const RealField& u, double s, double alpha) {
  const int n = u.grid().dim;
  const double theta = n * alpha / (2.0 * s);
  const double grad = fractional_seminorm(u, s);
  const double l2 = l2_norm(u);
  double denom = 0.0;
  for (double v : u.values()) denom += std::pow(std::abs(v), alpha + 2.0);
  denom *= u.grid().cell_volume();
  if (!(denom > 0.0)) throw std::invalid_argument("gns_quotient: zero denominator");
  return std::pow(grad, theta) * std::pow(l2, alpha + 2.0 - theta) / denom;
}

RealField translate_profile(const GroundState& g, const Eigen::VectorXd& z, double eps) {
  if (z.size() != g.grid().dim) throw std::invalid_argument("translate_profile: dimension mismatch");
  if (!(eps > 0.0)) throw std::invalid_argument("translate_profile: eps must be positive");
  const Eigen::VectorXd shift = z / eps;
  if (!(shift.norm() < g.grid().half_width / 2.0)) {
    throw std::invalid_argument("translate_profile: shift |z|/eps wraps more than half the torus");
  }
  return translate(g.profile, std::span<const double>(shift.data(), static_cast<std::size_t>(shift.size())));
}

}  // namespace fnls
