#include "fnls/fracops.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "fft_engine.hpp"

namespace fnls {

namespace {

void require_order(double sigma, const char* where) {
  if (!(sigma > 0.0 && sigma <= 2.0)) {
    throw std::invalid_argument(std::string(where) + ": order must lie in (0, 2], got " +
                                std::to_string(sigma));
  }
}

std::vector<std::complex<double>> half_spectrum(const RealField& u,
                                                const detail::FftEngine& engine) {
  std::vector<std::complex<double>> c(engine.half_size());
  engine.r2c(u.data(), c.data());
  return c;
}

RealField from_half_spectrum(std::vector<std::complex<double>>& c, const GridSpec& g,
                             const detail::FftEngine& engine) {
  RealField out(g);
  engine.c2r(c.data(), out.data());
  out *= 1.0 / static_cast<double>(g.size());
  return out;
}

}  // namespace

double MultiplierOp::symbol(double k2) const {
  switch (kind) {
    case SymbolKind::FractionalPower:
      return std::pow(k2, order);
    case SymbolKind::Bessel:
      return std::pow(1.0 + k2, order);
    case SymbolKind::Resolvent:
      return 1.0 / (std::pow(k2, order) + 1.0);
  }
  return 0.0;
}

RealField MultiplierOp::apply(const RealField& u) const {
  require_same_grid(grid, u.grid(), "MultiplierOp::apply");
  return apply_radial_symbol(u, [this](double k2) { return symbol(k2); });
}

RealField apply_radial_symbol(const RealField& u, const std::function<double(double)>& symbol) {
  const auto engine = detail::FftEngine::get(u.grid());
  auto c = half_spectrum(u, *engine);
  const auto& k2 = engine->k2_half();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= symbol(k2[i]);
  return from_half_spectrum(c, u.grid(), *engine);
}

double spectral_quadratic_form(const RealField& u, const std::function<double(double)>& symbol) {
  const auto engine = detail::FftEngine::get(u.grid());
  const auto c = half_spectrum(u, *engine);
  const auto& k2 = engine->k2_half();
  const auto& w = engine->half_weight();
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) sum += w[i] * symbol(k2[i]) * std::norm(c[i]);
  const double n = static_cast<double>(u.size());
  return u.grid().volume() * sum / (n * n);
}

namespace {

template <class F>
RealField apply_power_table(const RealField& u, double sigma, F&& from_power) {
  const auto engine = detail::FftEngine::get(u.grid());
  auto c = half_spectrum(u, *engine);
  const auto table = engine->k2_power(sigma);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= from_power((*table)[i]);
  return from_half_spectrum(c, u.grid(), *engine);
}

}  // namespace

RealField frac_laplacian(const RealField& u, double sigma) {
  require_order(sigma, "frac_laplacian");
  return apply_power_table(u, sigma, [](double p) { return p; });
}

RealField resolvent_multiplier(const RealField& u, double sigma) {
  require_order(sigma, "resolvent_multiplier");
  return apply_power_table(u, sigma, [](double p) { return 1.0 / (p + 1.0); });
}

double sobolev_norm(const RealField& u, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("sobolev_norm: order must be nonnegative");
  if (t == 0.0) return std::sqrt(spectral_quadratic_form(u, [](double) { return 1.0; }));
  return std::sqrt(spectral_quadratic_form(u, [t](double k2) { return std::pow(1.0 + k2, t); }));
}

double fractional_seminorm(const RealField& u, double sigma) {
  require_order(sigma, "fractional_seminorm");
  return std::sqrt(spectral_quadratic_form(u, [sigma](double k2) { return std::pow(k2, sigma); }));
}

double l2_inner(const RealField& u, const RealField& v) {
  require_same_grid(u.grid(), v.grid(), "l2_inner");
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return u.grid().cell_volume() * sum;
}

double l2_norm(const RealField& u) { return std::sqrt(l2_inner(u, u)); }

RealField partial_derivative(const RealField& u, int axis) {
  const GridSpec& g = u.grid();
  if (axis < 0 || axis >= g.dim) throw std::invalid_argument("partial_derivative: bad axis");
  const auto engine = detail::FftEngine::get(g);
  auto c = half_spectrum(u, *engine);
  engine->for_each_half_mode([&](std::size_t i, const std::array<double, kMaxDim>& k,
                                 const std::array<bool, kMaxDim>& nyq) {
    c[i] *= nyq[axis] ? std::complex<double>(0.0) : std::complex<double>(0.0, k[axis]);
  });
  return from_half_spectrum(c, g, *engine);
}

RealField translate(const RealField& u, std::span<const double> shift) {
  const GridSpec& g = u.grid();
  if (shift.size() != static_cast<std::size_t>(g.dim)) {
    throw std::invalid_argument("translate: shift has wrong dimension");
  }
  const auto engine = detail::FftEngine::get(g);
  auto c = half_spectrum(u, *engine);
  engine->for_each_half_mode([&](std::size_t i, const std::array<double, kMaxDim>& k,
                                 const std::array<bool, kMaxDim>& nyq) {
    std::complex<double> phase = 1.0;
    for (int a = 0; a < g.dim; ++a) {
      const double arg = k[a] * shift[a];
      phase *= nyq[a] ? std::complex<double>(std::cos(arg), 0.0) : std::polar(1.0, -arg);
    }
    c[i] *= phase;
  });
  return from_half_spectrum(c, g, *engine);
}

}  // namespace fnls
