// FFTW plan cache shared by the grid and operator code. Not part of the
// public headers.
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "fnls/grid.hpp"

namespace fnls::detail {

class FftEngine {
 public:
  /// One engine per (dim, N); plans are built once and reused.
  static std::shared_ptr<const FftEngine> get(const GridSpec& g);

  explicit FftEngine(const GridSpec& g);
  ~FftEngine();
  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;

  const GridSpec& grid() const { return grid_; }
  /// Number of modes in the half (r2c) layout: N^(n-1) * (N/2+1).
  std::size_t half_size() const { return half_size_; }
  std::size_t full_size() const { return full_size_; }

  /// Unnormalized real-to-half-complex forward transform.
  void r2c(const double* in, std::complex<double>* out) const;
  /// Unnormalized half-complex-to-real inverse; clobbers `in`.
  void c2r(std::complex<double>* in, double* out) const;
  /// Unnormalized in-place full complex transforms.
  void c2c_forward(std::complex<double>* data) const;
  void c2c_backward(std::complex<double>* data) const;

  /// |k|^2 for every half-layout mode.
  const std::vector<double>& k2_half() const { return k2_half_; }
  /// Weight of each half-layout mode in a full-spectrum sum (1 or 2).
  const std::vector<double>& half_weight() const { return half_weight_; }
  /// |k|^(2 sigma) on the half layout, computed once per sigma.
  std::shared_ptr<const std::vector<double>> k2_power(double sigma) const;

  /// Calls f(index, k, nyquist) for every half-layout mode, where k holds the
  /// per-axis wavenumbers and nyquist flags the j = -N/2 entries.
  template <class F>
  void for_each_half_mode(F&& f) const {
    const std::size_t n = grid_.points;
    const std::size_t last = n / 2 + 1;
    std::array<std::size_t, kMaxDim> idx{};
    std::array<double, kMaxDim> k{};
    std::array<bool, kMaxDim> nyq{};
    const int d = grid_.dim;
    for (std::size_t flat = 0; flat < half_size_; ++flat) {
      for (int a = 0; a < d; ++a) {
        k[a] = grid_.wavenumber(idx[a]);
        nyq[a] = idx[a] == n / 2;
      }
      f(flat, k, nyq);
      for (int a = d - 1; a >= 0; --a) {
        const std::size_t extent = (a == d - 1) ? last : n;
        if (++idx[a] < extent) break;
        idx[a] = 0;
      }
    }
  }

 private:
  GridSpec grid_;
  std::size_t half_size_ = 0;
  std::size_t full_size_ = 0;
  void* plan_r2c_ = nullptr;
  void* plan_c2r_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
  std::vector<double> k2_half_;
  std::vector<double> half_weight_;
  mutable std::mutex power_mutex_;
  mutable std::map<double, std::shared_ptr<const std::vector<double>>> powers_;
};

}  // namespace fnls::detail
