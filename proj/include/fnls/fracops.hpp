// Fourier-multiplier operators on the periodic grid: the fractional
// Laplacian, its shifted resolvent, Sobolev norms and the L2 pairing.
#pragma once

#include <functional>
#include <span>

#include "fnls/grid.hpp"

namespace fnls {

enum class SymbolKind {
  FractionalPower,  // |k|^(2 sigma)
  Bessel,           // (1 + |k|^2)^t
  Resolvent,        // (|k|^(2 sigma) + 1)^(-1)
};

/// A radial Fourier multiplier bound to a grid.
struct MultiplierOp {
  GridSpec grid;
  SymbolKind kind = SymbolKind::FractionalPower;
  double order = 1.0;

  double symbol(double k2) const;
  RealField apply(const RealField& u) const;
};

/// Applies an arbitrary radial symbol m(|k|^2) through a real FFT.
RealField apply_radial_symbol(const RealField& u, const std::function<double(double)>& symbol);

/// (2L)^n * sum_k m(|k|^2) |uhat(k)|^2.
double spectral_quadratic_form(const RealField& u, const std::function<double(double)>& symbol);

/// (-Delta)^sigma u with sigma in (0, 2]. Throws std::invalid_argument otherwise.
RealField frac_laplacian(const RealField& u, double sigma);

/// (1 + (-Delta)^sigma)^(-1) u with sigma in (0, 2].
RealField resolvent_multiplier(const RealField& u, double sigma);

/// ((2L)^n sum (1+|k|^2)^t |uhat|^2)^(1/2); t = 0 is the L2 norm.
double sobolev_norm(const RealField& u, double t);

/// ||(-Delta)^(sigma/2) u||_0.
double fractional_seminorm(const RealField& u, double sigma);

double l2_inner(const RealField& u, const RealField& v);
double l2_norm(const RealField& u);

/// Spectral partial derivative along `axis` (Nyquist mode dropped).
RealField partial_derivative(const RealField& u, int axis);

/// Returns x -> u(x - shift) on the torus via a phase shift. Integer
/// multiples of the spacing permute nodes exactly.
RealField translate(const RealField& u, std::span<const double> shift);

}  // namespace fnls
