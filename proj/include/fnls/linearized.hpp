// Matrix-free linearization A = (-Delta)^s + 1 + w - (alpha+1)|base|^alpha,
// its lowest eigenpairs, and the projections onto/off the translation kernel.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fnls/grid.hpp"
#include "fnls/groundstate.hpp"

namespace fnls {

class LinearizedOperator {
 public:
  /// `zeroth_order` is w; pass a zero field for the limit operator L0.
  LinearizedOperator(double s, double alpha, RealField base, RealField zeroth_order);

  /// L0 = (-Delta)^s + 1 - (alpha+1) u0^alpha.
  static LinearizedOperator limit(const GroundState& g);
  /// (-Delta)^s + 1 on the grid (base = 0, w = 0).
  static LinearizedOperator free(const GridSpec& grid, double s, double alpha);

  RealField apply(const RealField& phi) const;
  /// Same operator with w replaced by w + c (spectral shift by c).
  LinearizedOperator shifted(double c) const;

  const GridSpec& grid() const { return base_.grid(); }
  double s() const { return s_; }
  double alpha() const { return alpha_; }
  const RealField& base() const { return base_; }
  const RealField& zeroth_order() const { return zeroth_order_; }
  /// 1 + w - (alpha+1)|base|^alpha.
  const RealField& multiplier() const { return multiplier_; }

 private:
  double s_;
  double alpha_;
  RealField base_;
  RealField zeroth_order_;
  RealField multiplier_;
};

/// Orthonormal basis (in the L2 pairing) of a finite set of directions with
/// the associated orthogonal projections.
class KernelProjector {
 public:
  KernelProjector() = default;
  /// Orthonormalizes `directions` (modified Gram-Schmidt, two passes). Throws
  /// std::runtime_error when the Gram matrix condition number exceeds 1e8.
  explicit KernelProjector(const std::vector<RealField>& directions);

  RealField project_onto(const RealField& phi) const;
  RealField project_off(const RealField& phi) const;
  void project_off_inplace(RealField& phi) const;

  const std::vector<RealField>& basis() const { return basis_; }
  bool empty() const { return basis_.empty(); }
  double gram_condition() const { return gram_condition_; }

 private:
  std::vector<RealField> basis_;
  double gram_condition_ = 1.0;
};

/// Projectors for span{d_j u_{z,eps}}, the kernel fields translated by z/eps.
KernelProjector kernel_projectors(const GroundState& g, const Eigen::VectorXd& z, double eps);

struct EigenResult {
  std::vector<double> eigenvalues;   // ascending
  std::vector<RealField> eigenfields;  // L2-orthonormal
  std::vector<double> residuals;       // ||A phi - lambda phi||_0
  int iterations = 0;
  bool converged = false;
};

struct EigenOptions {
  int count = 4;
  double tol = 1e-8;  // residual <= tol * max(1, |lambda|)
  int max_iter = 2000;
  /// Extra block vectors beyond `count`; speeds up clustered spectra.
  int guard = 4;
  std::uint64_t seed = 12345;
  /// Directions removed from the operator on every application.
  const KernelProjector* deflate = nullptr;
};

/// Lowest eigenpairs by preconditioned LOBPCG, preconditioner
/// ((-Delta)^s + 1)^(-1). Throws std::invalid_argument for count > 16 and
/// SolverError (with the worst residual) when the iteration cap is hit.
EigenResult extremal_eigen(const LinearizedOperator& op, const EigenOptions& options);

/// Dense symmetric eigensolve; 1D grids with N <= 512 only.
EigenResult dense_eigen(const LinearizedOperator& op, int count);

/// Number of eigenvalues below -zero_tol among the lowest n+3.
int morse_index(const LinearizedOperator& op, double zero_tol = 1e-4);

struct SpectralGapResult {
  /// min ||A phi||_0 / ||phi||_{2s} over the lowest deflated eigenpairs.
  double h2s_gap = 0.0;
  /// min |lambda| over the same eigenpairs.
  double l2_gap = 0.0;
  RealField minimizer;
  std::vector<double> eigenvalues;
};

/// Gap of `op` on the orthogonal complement of `kernel`, estimated from the
/// lowest `count` eigenpairs of the deflated operator.
SpectralGapResult spectral_gap(const LinearizedOperator& op, const KernelProjector& kernel,
                               int count = 4);

}  // namespace fnls
