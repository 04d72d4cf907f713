// Shared fixtures for the unit tests and the acceptance binary.
#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <span>

#include "fnls/fracops.hpp"
#include "fnls/grid.hpp"
#include "fnls/groundstate.hpp"
#include "fnls/potential.hpp"

namespace fnls::testing {

// Band-limited random field: a handful of low Fourier modes per axis plus a
// few random Gaussian bumps. Smooth enough that spectral identities hold to
// rounding.
inline RealField random_smooth_field(const GridSpec& g, std::uint64_t seed, int modes = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double base = M_PI / g.half_width;

  struct Term {
    std::array<int, kMaxDim> k{};
    double a = 0.0, b = 0.0;
  };
  std::vector<Term> terms;
  for (int m = 0; m < modes * g.dim; ++m) {
    Term t;
    for (int d = 0; d < g.dim; ++d) t.k[static_cast<std::size_t>(d)] = static_cast<int>(rng() % 7) - 3;
    t.a = normal(rng);
    t.b = normal(rng);
    terms.push_back(t);
  }
  struct Bump {
    std::array<double, kMaxDim> c{};
    double amp = 0.0, width = 1.0;
  };
  std::vector<Bump> bumps(3);
  for (auto& b : bumps) {
    for (int d = 0; d < g.dim; ++d) b.c[static_cast<std::size_t>(d)] = 0.5 * g.half_width * unit(rng);
    b.amp = normal(rng);
    b.width = g.half_width * (0.1 + 0.1 * std::abs(unit(rng)));
  }
  return RealField::sample(g, [&](std::span<const double> x) {
    double v = 0.0;
    for (const auto& t : terms) {
      double phase = 0.0;
      for (int d = 0; d < g.dim; ++d) phase += base * t.k[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
      v += t.a * std::cos(phase) + t.b * std::sin(phase);
    }
    for (const auto& b : bumps) {
      double r2 = 0.0;
      for (int d = 0; d < g.dim; ++d) {
        const double dx = x[static_cast<std::size_t>(d)] - b.c[static_cast<std::size_t>(d)];
        r2 += dx * dx;
      }
      v += b.amp * std::exp(-r2 / (b.width * b.width));
    }
    return v;
  });
}

// Random sum of Gaussian bumps near the origin: decays faster than any
// ground state, so it behaves like an admissible perturbation of u0.
inline RealField random_localized_field(const GridSpec& g, std::uint64_t seed, double radius = 3.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  struct Bump {
    std::array<double, kMaxDim> c{};
    double amp = 0.0, width = 1.0;
  };
  std::vector<Bump> bumps(6);
  for (auto& b : bumps) {
    for (int d = 0; d < g.dim; ++d) b.c[static_cast<std::size_t>(d)] = radius * unit(rng);
    b.amp = normal(rng);
    b.width = 0.7 + 0.8 * std::abs(unit(rng));
  }
  return RealField::sample(g, [&](std::span<const double> x) {
    double v = 0.0;
    for (const auto& b : bumps) {
      double r2 = 0.0;
      for (int d = 0; d < g.dim; ++d) {
        const double dx = x[static_cast<std::size_t>(d)] - b.c[static_cast<std::size_t>(d)];
        r2 += dx * dx;
      }
      v += b.amp * std::exp(-r2 / (b.width * b.width));
    }
    return v;
  });
}

inline double max_abs_diff(const RealField& a, const RealField& b) { return (a - b).max_abs(); }

inline double relative_max_diff(const RealField& a, const RealField& b) {
  return (a - b).max_abs() / std::max(b.max_abs(), 1e-300);
}

// The shipped 1D case: s = 3/4, alpha = 1, V = 2 - exp(-x^2) normalized at 0.
inline constexpr double kShippedS = 0.75;
inline constexpr double kShippedAlpha = 1.0;

inline PotentialSpec gaussian_well_1d(double z0 = 0.0) {
  Eigen::VectorXd c = Eigen::VectorXd::Constant(1, z0);
  PotentialSpec raw = make_potential(PotentialKind::GaussianWell, 1, {c}, {1.0}, {1.0}, 2.0);
  return normalize_at_critical_point(raw, c);
}

// V ≡ 1: a zero-depth term keeps the PotentialSpec well formed; normalized by hand.
inline PotentialSpec flat_potential(int dim) {
  PotentialSpec spec;
  spec.kind = PotentialKind::GaussianWell;
  spec.dim = dim;
  spec.centers = {Eigen::VectorXd::Zero(dim)};
  spec.depths = {0.0};
  spec.widths = {1.0};
  spec.base = 1.0;
  spec.z0 = Eigen::VectorXd::Zero(dim);
  return spec;
}

// Asymmetric 1D well with a nondegenerate minimum at 0.3 (the three
// Gaussian gradients cancel there).
inline PotentialSpec asymmetric_well_1d() {
  std::vector<Eigen::VectorXd> centers{Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, 1.3),
                                       Eigen::VectorXd::Constant(1, -0.7)};
  PotentialSpec raw = make_potential(PotentialKind::GaussianWell, 1, centers,
                                     {1.0, -0.3, -0.5668398632892176}, {1.0, 1.0, 2.0}, 2.0);
  return normalize_at_critical_point(raw, Eigen::VectorXd::Constant(1, 0.3));
}

inline std::shared_ptr<const GroundState> ground_state(const GridSpec& g, double s, double alpha) {
  return std::make_shared<const GroundState>(compute_ground_state(g, s, alpha, gaussian_guess(g)));
}

}  // namespace fnls::testing
