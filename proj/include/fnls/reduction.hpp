// Lyapunov-Schmidt reduction on the stretched y-grid. The ansatz u0 stays at
// the origin and the potential is sampled as V(eps*y + z).
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fnls/groundstate.hpp"
#include "fnls/linearized.hpp"
#include "fnls/potential.hpp"

namespace fnls {

struct ReductionCaps {
  double eps_max = 0.25;
  double z_radius = 0.5;  // on |z - z0|
};

class ReductionProblem {
 public:
  /// `potential` must already be normalized at its critical point. nu
  /// defaults to the midpoint of the admissible interval. Throws
  /// AdmissibilityError outside max(1/2, n/4) < s < 1, 1 <= alpha < alpha_*,
  /// and std::invalid_argument for eps, z or nu outside their caps.
  ReductionProblem(std::shared_ptr<const GroundState> ground, PotentialSpec potential, double eps,
                   Eigen::VectorXd z, std::optional<double> nu = std::nullopt,
                   const ReductionCaps& caps = {});

  const GroundState& ground() const { return *ground_; }
  std::shared_ptr<const GroundState> ground_ptr() const { return ground_; }
  const PotentialSpec& potential() const { return potential_; }
  double eps() const { return eps_; }
  const Eigen::VectorXd& z() const { return z_; }
  double nu() const { return nu_; }
  const ReductionCaps& caps() const { return caps_; }
  const GridSpec& grid() const { return ground_->grid(); }
  double s() const { return ground_->s; }
  double alpha() const { return ground_->alpha; }

  /// V(eps*y + z) on the y-grid.
  const RealField& potential_field() const { return potential_field_; }
  /// L_{z,eps} before projection: (-Delta)^s + V_eps - (alpha+1) u0^alpha.
  const LinearizedOperator& linearized() const { return *linearized_; }
  /// Orthonormalized d_j u0.
  const KernelProjector& kernel() const { return *kernel_; }

 private:
  std::shared_ptr<const GroundState> ground_;
  PotentialSpec potential_;
  double eps_;
  Eigen::VectorXd z_;
  double nu_;
  ReductionCaps caps_;
  RealField potential_field_;
  std::shared_ptr<const LinearizedOperator> linearized_;
  std::shared_ptr<const KernelProjector> kernel_;
};

/// S_eps(u) = (-Delta)^s u + V_eps u - |u|^alpha u.
RealField s_eps_apply(const ReductionProblem& p, const RealField& u);

struct AnsatzResidual {
  RealField field;  // (V_eps - 1) u0
  double norm = 0.0;
};

AnsatzResidual ansatz_residual(const ReductionProblem& p);

/// N(phi) = -(|u+phi|^alpha (u+phi) - |u|^alpha u - (alpha+1)|u|^alpha phi).
RealField nonlinear_remainder(const RealField& u, const RealField& phi, double alpha);

struct LinearSolveOptions {
  double tol = 1e-12;  // on ||P(L phi - rhs)||_0 / ||rhs||_0
  int max_iter = 3000;
  int restarts = 4;
};

struct LinearSolveResult {
  RealField phi;
  int iterations = 0;
  double residual = 0.0;  // achieved relative residual
  /// ||P L phi||_0 / ||phi||_{2s}; 0 for phi = 0.
  double beta_meas = 0.0;
};

/// Preconditioned MINRES for P L P phi = P rhs on the kernel complement.
/// Throws SolverError at the iteration cap and std::runtime_error when the
/// output carries a kernel component above 1e-8.
LinearSolveResult solve_projected_linear(const ReductionProblem& p, const RealField& rhs,
                                         const LinearSolveOptions& options = {});

struct FixedPointOptions {
  double tol = 1e-9;  // on ||phi_{k+1} - phi_k||_{2s}
  int max_iter = 100;
  LinearSolveOptions linear;
};

struct ReductionSolution {
  RealField phi;
  double phi_norm_2s = 0.0;
  double ansatz_residual = 0.0;
  Eigen::VectorXd reduced_value;
  double projected_residual = 0.0;  // ||P S_eps(u0 + phi)||_0
  double full_residual = 0.0;       // ||S_eps(u0 + phi)||_0
  int iterations = 0;
  int linear_iterations = 0;
  double contraction_ratio = 0.0;
  double beta_meas = 0.0;  // smallest over the linear solves
  /// phi_norm_2s / ansatz_residual.
  double theta_ratio = 0.0;
};

/// Iterates phi <- -L^{-1} P (N(phi) + S_eps(u0)) from phi = 0. Throws
/// SolverError when a step ratio reaches 1 or the iteration cap is hit.
ReductionSolution fixed_point_solve(const ReductionProblem& p, const FixedPointOptions& options = {});

/// (1/eps) <S_eps(u0 + phi), d_j u0>.
Eigen::VectorXd reduced_map(const ReductionProblem& p, const RealField& phi);

/// -1/2 mass D^2V(z0) zhat, with zhat measured from z0.
Eigen::VectorXd limit_reduced_map(const GroundState& g, const PotentialSpec& spec,
                                  const Eigen::VectorXd& zhat);

/// Sample points in the closed unit ball: 9 equispaced points on [-1, 1] in
/// 1D; the origin plus 8 points on two rings otherwise.
std::vector<Eigen::VectorXd> unit_ball_samples(int dim);

struct ScaledMapRow {
  Eigen::VectorXd zhat;
  Eigen::VectorXd v_eps;
  Eigen::VectorXd v0;
  bool ok = false;
  std::string error;
};

struct ScaledMapTable {
  double eps = 0.0;
  double nu = 0.0;
  std::vector<ScaledMapRow> rows;
  double sup_discrepancy = 0.0;  // over the rows that converged
  bool complete = false;         // every row converged
};

/// v_eps(zhat) = eps^(-nu) s_eps(z0 + eps^nu zhat) on each sample, solved on
/// up to `jobs` threads; rows stay in input order.
ScaledMapTable scaled_map_study(std::shared_ptr<const GroundState> ground, const PotentialSpec& spec,
                                double eps, std::optional<double> nu,
                                const std::vector<Eigen::VectorXd>& samples,
                                const FixedPointOptions& options = {}, int jobs = 1,
                                const ReductionCaps& caps = {});

struct RootOptions {
  double tol = 1e-8;  // on |s_eps(z)|
  int max_iter = 30;
  FixedPointOptions fixed_point;
  ReductionCaps caps;
  int jobs = 1;  // threads for Jacobian columns
};

struct ConcentrationPoint {
  Eigen::VectorXd z;
  Eigen::VectorXd reduced_value;
  Eigen::MatrixXd jacobian;  // of s_eps at the last Newton iterate
  ReductionSolution solution;
  int newton_iterations = 0;
  bool used_bisection = false;
};

/// Damped Newton on s_eps with central differences (step eps^2/10); in 1D
/// falls back to bisection when Newton stalls. Throws SolverError with the
/// sampled values when no zero is found inside the z-cap.
ConcentrationPoint find_concentration_point(std::shared_ptr<const GroundState> ground,
                                            const PotentialSpec& spec, double eps,
                                            const Eigen::VectorXd& z_init,
                                            const RootOptions& options = {});

struct AssembledSolution {
  /// v_eps on the x-grid [-eps L, eps L)^n with the same N.
  RealField field;
  double full_residual = 0.0;  // ||eps^2s (-Delta)^s v + V v - |v|^alpha v||_0
  double norm = 0.0;           // ||v||_0
  Eigen::VectorXd peak;        // x-location of max v
};

/// v(x) = u0((x - z_eps)/eps) + phi((x - z_eps)/eps). Throws
/// std::invalid_argument when |z_eps|/eps >= L/2.
AssembledSolution assemble_solution(const GroundState& g, const PotentialSpec& spec, double eps,
                                    const Eigen::VectorXd& z_eps, const RealField& phi);

}  // namespace fnls
