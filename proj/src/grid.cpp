#include "fnls/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

#include "fft_engine.hpp"
#include "fnls/errors.hpp"

namespace fnls {

namespace {

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

std::size_t GridSpec::size() const { return ipow(points, dim); }

double GridSpec::cell_volume() const { return std::pow(spacing(), dim); }

double GridSpec::volume() const { return std::pow(2.0 * half_width, dim); }

int GridSpec::frequency_index(std::size_t i) const {
  const auto n = static_cast<long>(points);
  const auto j = static_cast<long>(i);
  return static_cast<int>(j < n / 2 ? j : j - n);
}

double GridSpec::wavenumber(std::size_t i) const {
  return std::numbers::pi * frequency_index(i) / half_width;
}

GridSpec build_grid(int dim, double half_width, std::size_t points) {
  if (dim < 1 || dim > kMaxDim) {
    throw ConfigError("grid: dimension must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw ConfigError("grid: half width L must be positive");
  }
  if (points < 8 || !is_power_of_two(points)) {
    throw ConfigError("grid: points per axis must be a power of two >= 8 (got " +
                      std::to_string(points) + ")");
  }
  return GridSpec{dim, half_width, points};
}

std::array<std::size_t, kMaxDim> unravel(const GridSpec& g, std::size_t flat) {
  std::array<std::size_t, kMaxDim> idx{};
  for (int a = g.dim - 1; a >= 0; --a) {
    idx[a] = flat % g.points;
    flat /= g.points;
  }
  return idx;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

// ---------------------------------------------------------------------------
// RealField

RealField::RealField(const GridSpec& g) : grid_(g), values_(g.size(), 0.0) {}

RealField::RealField(const GridSpec& g, std::vector<double> values)
    : grid_(g), values_(std::move(values)) {
  if (values_.size() != g.size()) {
    throw std::invalid_argument("RealField: value count " + std::to_string(values_.size()) +
                                " does not match grid size " + std::to_string(g.size()));
  }
}

RealField RealField::sample(const GridSpec& g,
                            const std::function<double(std::span<const double>)>& f) {
  RealField u(g);
  std::array<double, kMaxDim> x{};
  for (std::size_t flat = 0; flat < u.size(); ++flat) {
    const auto idx = unravel(g, flat);
    for (int a = 0; a < g.dim; ++a) x[a] = g.node(idx[a]);
    u.values_[flat] = f(std::span<const double>(x.data(), static_cast<std::size_t>(g.dim)));
  }
  return u;
}

RealField RealField::constant(const GridSpec& g, double c) {
  return RealField(g, std::vector<double>(g.size(), c));
}

RealField& RealField::operator+=(const RealField& other) {
  require_same_grid(grid_, other.grid_, "RealField::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

RealField& RealField::operator-=(const RealField& other) {
  require_same_grid(grid_, other.grid_, "RealField::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

RealField& RealField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

RealField& RealField::axpy(double a, const RealField& x) {
  require_same_grid(grid_, x.grid_, "RealField::axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
  return *this;
}

double RealField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool RealField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

RealField operator+(RealField a, const RealField& b) { return a += b; }
RealField operator-(RealField a, const RealField& b) { return a -= b; }
RealField operator*(double a, RealField u) { return u *= a; }
RealField operator*(RealField u, double a) { return u *= a; }

RealField hadamard(const RealField& a, const RealField& b) {
  require_same_grid(a.grid(), b.grid(), "hadamard");
  RealField out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

RealField transform_values(const RealField& u, const std::function<double(double)>& f) {
  RealField out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(u[i]);
  return out;
}

double integrate(const RealField& u) {
  double sum = 0.0;
  for (double v : u.values()) sum += v;
  return u.grid().cell_volume() * sum;
}

// ---------------------------------------------------------------------------
// SpectralField

SpectralField::SpectralField(const GridSpec& g, std::vector<std::complex<double>> coeffs)
    : grid_(g), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != g.size()) {
    throw std::invalid_argument("SpectralField: coefficient count does not match grid");
  }
}

std::complex<double> SpectralField::at(std::span<const int> j) const {
  if (j.size() != static_cast<std::size_t>(grid_.dim)) {
    throw std::invalid_argument("SpectralField::at: frequency vector has wrong dimension");
  }
  const long n = static_cast<long>(grid_.points);
  std::size_t flat = 0;
  for (int a = 0; a < grid_.dim; ++a) {
    if (j[a] < -n / 2 || j[a] >= n / 2) {
      throw std::out_of_range("SpectralField::at: frequency index out of range");
    }
    const long pos = j[a] >= 0 ? j[a] : j[a] + n;
    flat = flat * grid_.points + static_cast<std::size_t>(pos);
  }
  return coeffs_[flat];
}

namespace {

// (-1)^(j_1 + ... + j_n): phase that moves the DFT origin from node 0 to x = 0.
double origin_phase(const GridSpec& g, std::size_t flat) {
  const auto idx = unravel(g, flat);
  int parity = 0;
  for (int a = 0; a < g.dim; ++a) parity += g.frequency_index(idx[a]);
  return (parity % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace

SpectralField forward_transform(const RealField& u) {
  const GridSpec& g = u.grid();
  const auto engine = detail::FftEngine::get(g);
  std::vector<std::complex<double>> c(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) c[i] = u[i];
  engine->c2c_forward(c.data());
  const double scale = 1.0 / static_cast<double>(u.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= scale * origin_phase(g, i);
  return SpectralField(g, std::move(c));
}

RealField inverse_transform(const SpectralField& uhat) {
  const GridSpec& g = uhat.grid();
  const auto engine = detail::FftEngine::get(g);
  std::vector<std::complex<double>> c(uhat.coeffs().begin(), uhat.coeffs().end());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= origin_phase(g, i);
  engine->c2c_backward(c.data());
  RealField u(g);
  double scale = 0.0;
  double imag = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    u[i] = c[i].real();
    scale = std::max(scale, std::abs(c[i]));
    imag = std::max(imag, std::abs(c[i].imag()));
  }
  if (imag > 1e-10 * std::max(scale, 1e-300) && imag > 0.0) {
    throw std::invalid_argument("inverse_transform: coefficients are not conjugate symmetric");
  }
  return u;
}

// ---------------------------------------------------------------------------
// FftEngine

namespace detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::shared_ptr<const FftEngine> FftEngine::get(const GridSpec& g) {
  static std::mutex cache_mutex;
  // L enters through the wavenumber tables, so it is part of the key.
  static std::map<std::tuple<int, std::size_t, double>, std::shared_ptr<const FftEngine>> by_grid;
  std::lock_guard lock(cache_mutex);
  const auto key = std::make_tuple(g.dim, g.points, g.half_width);
  if (auto it = by_grid.find(key); it != by_grid.end()) return it->second;
  auto engine = std::make_shared<const FftEngine>(g);
  by_grid.emplace(key, engine);
  return engine;
}

FftEngine::FftEngine(const GridSpec& g) : grid_(g) {
  const int n = static_cast<int>(g.points);
  std::array<int, kMaxDim> dims{n, n, n};
  full_size_ = g.size();
  half_size_ = full_size_ / g.points * (g.points / 2 + 1);

  std::vector<double> rbuf(full_size_);
  std::vector<std::complex<double>> hbuf(half_size_);
  std::vector<std::complex<double>> cbuf(full_size_);
  auto* hptr = reinterpret_cast<fftw_complex*>(hbuf.data());
  auto* cptr = reinterpret_cast<fftw_complex*>(cbuf.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  {
    std::lock_guard lock(planner_mutex());
    plan_r2c_ = fftw_plan_dft_r2c(g.dim, dims.data(), rbuf.data(), hptr, flags);
    plan_c2r_ = fftw_plan_dft_c2r(g.dim, dims.data(), hptr, rbuf.data(), flags);
    plan_fwd_ = fftw_plan_dft(g.dim, dims.data(), cptr, cptr, FFTW_FORWARD, flags);
    plan_bwd_ = fftw_plan_dft(g.dim, dims.data(), cptr, cptr, FFTW_BACKWARD, flags);
  }
  if (!plan_r2c_ || !plan_c2r_ || !plan_fwd_ || !plan_bwd_) {
    throw std::runtime_error("FftEngine: FFTW planning failed");
  }

  k2_half_.resize(half_size_);
  half_weight_.resize(half_size_);
  const std::size_t last = g.points / 2 + 1;
  for_each_half_mode([&](std::size_t i, const std::array<double, kMaxDim>& k,
                         const std::array<bool, kMaxDim>&) {
    double k2 = 0.0;
    for (int a = 0; a < g.dim; ++a) k2 += k[a] * k[a];
    k2_half_[i] = k2;
    const std::size_t m = i % last;
    half_weight_[i] = (m == 0 || m == g.points / 2) ? 1.0 : 2.0;
  });
}

FftEngine::~FftEngine() {
  std::lock_guard lock(planner_mutex());
  for (void* p : {plan_r2c_, plan_c2r_, plan_fwd_, plan_bwd_}) {
    if (p) fftw_destroy_plan(static_cast<fftw_plan>(p));
  }
}

std::shared_ptr<const std::vector<double>> FftEngine::k2_power(double sigma) const {
  std::lock_guard lock(power_mutex_);
  auto& slot = powers_[sigma];
  if (!slot) {
    auto table = std::make_shared<std::vector<double>>(k2_half_.size());
    for (std::size_t i = 0; i < k2_half_.size(); ++i) (*table)[i] = std::pow(k2_half_[i], sigma);
    slot = std::move(table);
  }
  return slot;
}

void FftEngine::r2c(const double* in, std::complex<double>* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_r2c_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void FftEngine::c2r(std::complex<double>* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_c2r_), reinterpret_cast<fftw_complex*>(in), out);
}

void FftEngine::c2c_forward(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), p, p);
}

void FftEngine::c2c_backward(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_), p, p);
}

}  // namespace detail
}  // namespace fnls
