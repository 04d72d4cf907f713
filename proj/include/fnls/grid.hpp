// Periodic tensor grid on [-L, L)^n, real/spectral field containers and the
// discrete Fourier transforms that connect them.
//
// Layout: row-major, last axis fastest. Node i on an axis sits at -L + i*h,
// h = 2L/N. Spectral coefficients are normalized so that a constant field c
// has coefficient c at k = 0, and carry the physical phase of the shifted
// nodes, i.e. u(x) = sum_k uhat(k) exp(i k.x) exactly on the nodes.
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fnls {

inline constexpr int kMaxDim = 3;

struct GridSpec {
  int dim = 1;
  double half_width = 1.0;
  std::size_t points = 8;  // per axis

  double spacing() const { return 2.0 * half_width / static_cast<double>(points); }
  std::size_t size() const;
  /// Volume element h^n.
  double cell_volume() const;
  /// Torus volume (2L)^n.
  double volume() const;
  double node(std::size_t i) const { return -half_width + static_cast<double>(i) * spacing(); }
  /// Signed frequency index j in [-N/2, N/2) for FFT-ordered position `i`.
  int frequency_index(std::size_t i) const;
  /// Wavenumber pi*j/L for FFT-ordered position `i`.
  double wavenumber(std::size_t i) const;

  bool operator==(const GridSpec&) const = default;
};

/// Validates and returns the grid. Throws ConfigError for n outside {1,2,3},
/// N not a power of two >= 8, or L <= 0.
GridSpec build_grid(int dim, double half_width, std::size_t points);

/// Splits a flat row-major index into per-axis indices.
std::array<std::size_t, kMaxDim> unravel(const GridSpec& g, std::size_t flat);

class RealField {
 public:
  RealField() = default;
  explicit RealField(const GridSpec& g);
  RealField(const GridSpec& g, std::vector<double> values);

  /// Samples f(x) at every node; x has `dim` entries.
  static RealField sample(const GridSpec& g, const std::function<double(std::span<const double>)>& f);
  static RealField constant(const GridSpec& g, double c);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  RealField& operator+=(const RealField& other);
  RealField& operator-=(const RealField& other);
  RealField& operator*=(double a);
  /// this += a * x
  RealField& axpy(double a, const RealField& x);

  double max_abs() const;
  bool all_finite() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

RealField operator+(RealField a, const RealField& b);
RealField operator-(RealField a, const RealField& b);
RealField operator*(double a, RealField u);
RealField operator*(RealField u, double a);
/// Pointwise product.
RealField hadamard(const RealField& a, const RealField& b);
/// Pointwise map.
RealField transform_values(const RealField& u, const std::function<double(double)>& f);

/// Throws std::invalid_argument when the two grids differ.
void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(const GridSpec& g, std::vector<std::complex<double>> coeffs);

  const GridSpec& grid() const { return grid_; }
  std::span<const std::complex<double>> coeffs() const { return coeffs_; }
  std::span<std::complex<double>> coeffs() { return coeffs_; }
  /// Coefficient at the signed frequency vector j (each entry in [-N/2, N/2)).
  std::complex<double> at(std::span<const int> j) const;
  std::size_t size() const { return coeffs_.size(); }

 private:
  GridSpec grid_;
  std::vector<std::complex<double>> coeffs_;  // FFT order per axis
};

SpectralField forward_transform(const RealField& u);
/// Throws std::invalid_argument when the coefficients are not conjugate
/// symmetric (imaginary residue above 1e-10 of the field's scale).
RealField inverse_transform(const SpectralField& uhat);

/// hn * sum of values.
double integrate(const RealField& u);

}  // namespace fnls
