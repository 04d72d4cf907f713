#include "fnls/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "fnls/errors.hpp"
#include "fnls/fracops.hpp"

namespace fnls {

LinearizedOperator::LinearizedOperator(double s, double alpha, RealField base,
                                       RealField zeroth_order)
    : s_(s), alpha_(alpha), base_(std::move(base)), zeroth_order_(std::move(zeroth_order)) {
  require_same_grid(base_.grid(), zeroth_order_.grid(), "LinearizedOperator");
  multiplier_ = RealField(base_.grid());
  for (std::size_t i = 0; i < base_.size(); ++i) {
    multiplier_[i] =
        1.0 + zeroth_order_[i] - (alpha_ + 1.0) * std::pow(std::abs(base_[i]), alpha_);
  }
}

LinearizedOperator LinearizedOperator::limit(const GroundState& g) {
  return LinearizedOperator(g.s, g.alpha, g.profile, RealField(g.grid()));
}

LinearizedOperator LinearizedOperator::free(const GridSpec& grid, double s, double alpha) {
  return LinearizedOperator(s, alpha, RealField(grid), RealField(grid));
}

RealField LinearizedOperator::apply(const RealField& phi) const {
  require_same_grid(grid(), phi.grid(), "LinearizedOperator::apply");
  RealField out = frac_laplacian(phi, s_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += multiplier_[i] * phi[i];
  return out;
}

LinearizedOperator LinearizedOperator::shifted(double c) const {
  RealField w = zeroth_order_;
  for (double& v : w.values()) v += c;
  return LinearizedOperator(s_, alpha_, base_, std::move(w));
}

// ---------------------------------------------------------------------------
// KernelProjector

KernelProjector::KernelProjector(const std::vector<RealField>& directions) {
  const std::size_t k = directions.size();
  if (k == 0) return;
  Eigen::MatrixXd gram(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      gram(i, j) = gram(j, i) = l2_inner(directions[i], directions[j]);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  gram_condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(gram_condition_ <= 1e8)) {
    throw std::runtime_error("KernelProjector: kernel directions are nearly dependent (Gram condition " +
                             std::to_string(gram_condition_) + ")");
  }
  for (const RealField& d : directions) {
    RealField e = d;
    for (int pass = 0; pass < 2; ++pass) {
      for (const RealField& b : basis_) e.axpy(-l2_inner(e, b), b);
    }
    e *= 1.0 / l2_norm(e);
    basis_.push_back(std::move(e));
  }
}

RealField KernelProjector::project_onto(const RealField& phi) const {
  RealField out(phi.grid());
  for (const RealField& b : basis_) out.axpy(l2_inner(phi, b), b);
  return out;
}

RealField KernelProjector::project_off(const RealField& phi) const {
  RealField out = phi;
  project_off_inplace(out);
  return out;
}

void KernelProjector::project_off_inplace(RealField& phi) const {
  for (const RealField& b : basis_) phi.axpy(-l2_inner(phi, b), b);
}

KernelProjector kernel_projectors(const GroundState& g, const Eigen::VectorXd& z, double eps) {
  if (g.kernel_fields.empty()) throw std::invalid_argument("kernel_projectors: no kernel fields");
  if (!(eps > 0.0)) throw std::invalid_argument("kernel_projectors: eps must be positive");
  const Eigen::VectorXd shift = z / eps;
  if (!(shift.norm() < g.grid().half_width / 2.0)) {
    throw std::invalid_argument("kernel_projectors: |z|/eps wraps more than half the torus");
  }
  std::vector<RealField> dirs;
  const bool zero_shift = shift.isZero(0.0);
  for (const RealField& f : g.kernel_fields) {
    dirs.push_back(zero_shift ? f
                              : translate(f, std::span<const double>(
                                                 shift.data(), static_cast<std::size_t>(shift.size()))));
  }
  return KernelProjector(dirs);
}

// ---------------------------------------------------------------------------
// Eigensolvers

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class BlockOperator {
 public:
  BlockOperator(const LinearizedOperator& op, const KernelProjector* deflate)
      : op_(op), deflate_(deflate), scratch_(op.grid()) {}

  void project(MatrixXd& block) {
    if (!deflate_ || deflate_->empty()) return;
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      load(block.col(c));
      deflate_->project_off_inplace(scratch_);
      store(block.col(c));
    }
  }

  MatrixXd apply(const MatrixXd& block) {
    MatrixXd out(block.rows(), block.cols());
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      load(block.col(c));
      if (deflate_) deflate_->project_off_inplace(scratch_);
      scratch_ = op_.apply(scratch_);
      if (deflate_) deflate_->project_off_inplace(scratch_);
      store(out.col(c));
    }
    return out;
  }

  MatrixXd precondition(const MatrixXd& block) {
    MatrixXd out(block.rows(), block.cols());
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      load(block.col(c));
      scratch_ = resolvent_multiplier(scratch_, op_.s());
      if (deflate_) deflate_->project_off_inplace(scratch_);
      store(out.col(c));
    }
    return out;
  }

 private:
  template <class Col>
  void load(const Col& col) {
    std::copy(col.data(), col.data() + col.size(), scratch_.data());
  }
  template <class Col>
  void store(Col col) {
    std::copy(scratch_.data(), scratch_.data() + col.size(), col.data());
  }

  const LinearizedOperator& op_;
  const KernelProjector* deflate_;
  RealField scratch_;
};

// Orthonormalizes the columns of S (SVQB) and returns the transform Q with
// S*Q orthonormal. Nearly dependent directions are dropped.
MatrixXd svqb(const MatrixXd& s, double drop = 1e-13) {
  MatrixXd gram = s.transpose() * s;
  VectorXd d = gram.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
  gram = d.asDiagonal() * gram * d.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (gram + gram.transpose()));
  const VectorXd& theta = es.eigenvalues();
  const double cutoff = drop * theta.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (theta[i] > cutoff) keep.push_back(i);
  }
  MatrixXd q(s.cols(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    q.col(static_cast<Eigen::Index>(c)) =
        d.asDiagonal() * es.eigenvectors().col(keep[c]) / std::sqrt(theta[keep[c]]);
  }
  return q;
}

EigenResult package(const GridSpec& g, const MatrixXd& x, const VectorXd& lambda,
                    const MatrixXd& ax, int count) {
  EigenResult r;
  const double root_h = std::sqrt(g.cell_volume());
  for (int j = 0; j < count; ++j) {
    const double norm = x.col(j).norm();
    RealField f(g);
    for (Eigen::Index i = 0; i < x.rows(); ++i) f[i] = x(i, j) / (norm * root_h);
    r.eigenvalues.push_back(lambda[j]);
    r.residuals.push_back((ax.col(j) - lambda[j] * x.col(j)).norm() / norm);
    r.eigenfields.push_back(std::move(f));
  }
  return r;
}

}  // namespace

EigenResult extremal_eigen(const LinearizedOperator& op, const EigenOptions& options) {
  if (options.count < 1 || options.count > 16) {
    throw std::invalid_argument("extremal_eigen: count must lie in [1, 16]");
  }
  const GridSpec& g = op.grid();
  const auto dim = static_cast<Eigen::Index>(g.size());
  const auto m = std::min<Eigen::Index>(options.count + std::max(options.guard, 0), dim / 2);
  if (m < options.count) throw std::invalid_argument("extremal_eigen: grid too small for count");

  BlockOperator block(op, options.deflate);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  MatrixXd x(dim, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index i = 0; i < dim; ++i) x(i, c) = normal(rng);
  }
  block.project(x);
  x = x * svqb(x);
  MatrixXd ax = block.apply(x);

  auto rayleigh_ritz = [&](const MatrixXd& basis, const MatrixXd& abasis, MatrixXd& coeffs,
                           VectorXd& values) {
    MatrixXd h = basis.transpose() * abasis;
    h = 0.5 * (h + h.transpose());
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    coeffs = es.eigenvectors().leftCols(m);
    values = es.eigenvalues().head(m);
  };

  MatrixXd coeffs;
  VectorXd lambda;
  rayleigh_ritz(x, ax, coeffs, lambda);
  x = x * coeffs;
  ax = ax * coeffs;

  MatrixXd p, ap;
  int it = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (; it < options.max_iter; ++it) {
    if (it > 0 && it % 25 == 0) {
      ax = block.apply(x);
    }
    const MatrixXd r = ax - x * lambda.asDiagonal();
    worst = 0.0;
    for (int j = 0; j < options.count; ++j) {
      const double rel = r.col(j).norm() / x.col(j).norm() / std::max(1.0, std::abs(lambda[j]));
      worst = std::max(worst, rel);
    }
    if (worst <= options.tol) break;

    const MatrixXd w = block.precondition(r);

    // Search directions [W, P], orthonormal and orthogonal to X; their
    // images are recomputed rather than updated, which keeps the projected
    // matrix accurate once the residuals are tiny.
    const Eigen::Index pc = p.cols();
    MatrixXd z(dim, w.cols() + pc);
    z.leftCols(w.cols()) = w;
    if (pc > 0) z.rightCols(pc) = p;
    for (int pass = 0; pass < 2 && z.cols() > 0; ++pass) {
      z -= x * (x.transpose() * z);
      z = z * svqb(z, 1e-10);
    }
    const MatrixXd az = block.apply(z);
    MatrixXd sq(dim, m + z.cols());
    MatrixXd asq(dim, sq.cols());
    sq.leftCols(m) = x;
    asq.leftCols(m) = ax;
    sq.rightCols(z.cols()) = z;
    asq.rightCols(z.cols()) = az;
    rayleigh_ritz(sq, asq, coeffs, lambda);
    const MatrixXd cz = coeffs.bottomRows(z.cols());
    p = z * cz;
    ap = az * cz;
    const MatrixXd x_new = x * coeffs.topRows(m) + p;
    const MatrixXd ax_new = ax * coeffs.topRows(m) + ap;
    x = x_new;
    ax = ax_new;
  }

  ax = block.apply(x);
  MatrixXd h = x.transpose() * ax;
  h = 0.5 * (h + h.transpose());
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
  x = x * es.eigenvectors();
  ax = ax * es.eigenvectors();
  lambda = es.eigenvalues();

  EigenResult result = package(g, x, lambda, ax, options.count);
  result.iterations = it;
  worst = 0.0;
  for (int j = 0; j < options.count; ++j) {
    worst = std::max(worst, result.residuals[j] / std::max(1.0, std::abs(result.eigenvalues[j])));
  }
  // Residual tolerance with a small allowance for the final recomputation.
  result.converged = worst <= 10.0 * options.tol;
  if (!result.converged) {
    throw SolverError("extremal_eigen: LOBPCG did not converge (worst relative residual " +
                          std::to_string(worst) + ")",
                      worst, it);
  }
  return result;
}

EigenResult dense_eigen(const LinearizedOperator& op, int count) {
  const GridSpec& g = op.grid();
  if (g.dim != 1 || g.points > 512) {
    throw std::invalid_argument("dense_eigen: only 1D grids with N <= 512");
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  if (count < 1 || count > n) throw std::invalid_argument("dense_eigen: bad count");
  MatrixXd a(n, n);
  RealField e(g);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::fill(e.values().begin(), e.values().end(), 0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    const RealField col = op.apply(e);
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = col[static_cast<std::size_t>(i)];
  }
  a = 0.5 * (a + a.transpose());
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const MatrixXd x = es.eigenvectors().leftCols(count);
  EigenResult r = package(g, x, es.eigenvalues(), a * x, count);
  r.converged = true;
  return r;
}

int morse_index(const LinearizedOperator& op, double zero_tol) {
  EigenOptions opts;
  opts.count = op.grid().dim + 3;
  const EigenResult r = extremal_eigen(op, opts);
  return static_cast<int>(
      std::count_if(r.eigenvalues.begin(), r.eigenvalues.end(), [&](double l) { return l < -zero_tol; }));
}

SpectralGapResult spectral_gap(const LinearizedOperator& op, const KernelProjector& kernel,
                               int count) {
  EigenOptions opts;
  opts.count = count;
  opts.deflate = &kernel;
  const EigenResult r = extremal_eigen(op, opts);
  SpectralGapResult gap;
  gap.eigenvalues = r.eigenvalues;
  gap.h2s_gap = std::numeric_limits<double>::infinity();
  gap.l2_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < r.eigenfields.size(); ++j) {
    const RealField& phi = r.eigenfields[j];
    const RealField aphi = kernel.project_off(op.apply(phi));
    const double ratio = l2_norm(aphi) / sobolev_norm(phi, 2.0 * op.s());
    if (ratio < gap.h2s_gap) {
      gap.h2s_gap = ratio;
      gap.minimizer = phi;
    }
    gap.l2_gap = std::min(gap.l2_gap, std::abs(r.eigenvalues[j]));
  }
  return gap;
}

}  // namespace fnls
