#include "fnls/reduction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include "fnls/errors.hpp"
#include "fnls/fracops.hpp"

namespace fnls {

namespace {

RealField power_nonlinearity(const RealField& u, double alpha) {
  return transform_values(u, [alpha](double v) { return std::pow(std::abs(v), alpha) * v; });
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

ReductionProblem::ReductionProblem(std::shared_ptr<const GroundState> ground, PotentialSpec potential,
                                   double eps, Eigen::VectorXd z, std::optional<double> nu,
                                   const ReductionCaps& caps)
    : ground_(std::move(ground)),
      potential_(std::move(potential)),
      eps_(eps),
      z_(std::move(z)),
      caps_(caps) {
  if (!ground_) throw std::invalid_argument("ReductionProblem: missing ground state");
  const int n = ground_->grid().dim;
  const auto range = admissible_range(n, ground_->s);
  if (!range.reduction_admissible) {
    throw AdmissibilityError("reduction: need max(1/2, n/4) < s < 1, got s = " +
                             std::to_string(ground_->s));
  }
  if (!(ground_->alpha >= 1.0 && ground_->alpha < range.alpha_max)) {
    throw AdmissibilityError("reduction: need 1 <= alpha < alpha_* = " +
                             std::to_string(range.alpha_max) + ", got " +
                             std::to_string(ground_->alpha));
  }
  if (!range.nu_nonempty()) throw AdmissibilityError("reduction: empty nu interval");
  if (potential_.dim != n || z_.size() != n) {
    throw std::invalid_argument("ReductionProblem: dimension mismatch");
  }
  if (!potential_.normalized()) {
    throw std::invalid_argument("ReductionProblem: potential is not normalized at a critical point");
  }
  if (!(eps_ > 0.0 && eps_ <= caps_.eps_max)) {
    throw std::invalid_argument("ReductionProblem: eps must lie in (0, " +
                                std::to_string(caps_.eps_max) + "]");
  }
  if (!((z_ - potential_.z0).norm() <= caps_.z_radius)) {
    throw std::invalid_argument("ReductionProblem: |z - z0| exceeds " + std::to_string(caps_.z_radius));
  }
  nu_ = nu.value_or(range.nu_midpoint());
  if (!(nu_ > range.nu_lower && nu_ < range.nu_upper)) {
    throw std::invalid_argument("ReductionProblem: nu outside (" + std::to_string(range.nu_lower) +
                                ", " + std::to_string(range.nu_upper) + ")");
  }

  potential_field_ = rescaled_potential_field(potential_, grid(), eps_, z_);
  RealField w = potential_field_;
  for (double& v : w.values()) v -= 1.0;
  linearized_ = std::make_shared<const LinearizedOperator>(ground_->s, ground_->alpha,
                                                           ground_->profile, std::move(w));
  kernel_ = std::make_shared<const KernelProjector>(ground_->kernel_fields);
}

RealField s_eps_apply(const ReductionProblem& p, const RealField& u) {
  require_same_grid(p.grid(), u.grid(), "s_eps_apply");
  RealField r = frac_laplacian(u, p.s());
  r += hadamard(p.potential_field(), u);
  r -= power_nonlinearity(u, p.alpha());
  return r;
}

AnsatzResidual ansatz_residual(const ReductionProblem& p) {
  AnsatzResidual a;
  a.field = p.ground().profile;
  for (std::size_t i = 0; i < a.field.size(); ++i) a.field[i] *= p.potential_field()[i] - 1.0;
  a.norm = l2_norm(a.field);
  return a;
}

RealField nonlinear_remainder(const RealField& u, const RealField& phi, double alpha) {
  require_same_grid(u.grid(), phi.grid(), "nonlinear_remainder");
  RealField out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i];
    const double b = a + phi[i];
    const double pa = std::pow(std::abs(a), alpha);
    out[i] = -(std::pow(std::abs(b), alpha) * b - pa * a - (alpha + 1.0) * pa * phi[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projected MINRES

namespace {

struct MinresOutcome {
  int iterations = 0;
};

// Preconditioned MINRES (Paige-Saunders) from x0 = 0 for A x = b, stopping
// when the preconditioned residual estimate drops below tol * its start.
template <class Apply, class Precond>
MinresOutcome minres(const Apply& apply, const Precond& precond, const RealField& b, RealField& x,
                     double tol, int max_iter) {
  MinresOutcome out;
  x = RealField(b.grid());
  RealField r1 = b;
  RealField y = precond(r1);
  const double beta1_sq = l2_inner(r1, y);
  if (beta1_sq < 0.0) throw std::runtime_error("minres: preconditioner is not positive");
  const double beta1 = std::sqrt(beta1_sq);
  if (beta1 == 0.0) return out;

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  RealField w(b.grid()), w1(b.grid()), w2(b.grid());
  RealField r2 = r1;
  for (int itn = 1; itn <= max_iter; ++itn) {
    RealField v = y;
    v *= 1.0 / beta;
    y = apply(v);
    if (itn >= 2) y.axpy(-beta / oldb, r1);
    const double alfa = l2_inner(v, y);
    y.axpy(-alfa / beta, r2);
    r1 = std::move(r2);
    r2 = y;
    y = precond(r2);
    oldb = beta;
    const double beta_sq = l2_inner(r2, y);
    if (beta_sq < 0.0) throw std::runtime_error("minres: preconditioner is not positive");
    beta = std::sqrt(beta_sq);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), std::numeric_limits<double>::min());
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = std::move(w2);
    w2 = std::move(w);
    w = v;
    w.axpy(-oldeps, w1);
    w.axpy(-delta, w2);
    w *= 1.0 / gamma;
    x.axpy(phi, w);
    out.iterations = itn;
    if (phibar <= tol * beta1 || beta == 0.0) break;
  }
  return out;
}

}  // namespace

LinearSolveResult solve_projected_linear(const ReductionProblem& p, const RealField& rhs,
                                         const LinearSolveOptions& options) {
  require_same_grid(p.grid(), rhs.grid(), "solve_projected_linear");
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve_projected_linear: tol must be positive");
  const KernelProjector& kernel = p.kernel();
  const LinearizedOperator& op = p.linearized();
  const double s = p.s();

  auto apply = [&](const RealField& v) {
    RealField out = op.apply(kernel.project_off(v));
    kernel.project_off_inplace(out);
    return out;
  };
  auto precond = [&](const RealField& r) {
    RealField out = resolvent_multiplier(kernel.project_off(r), s);
    kernel.project_off_inplace(out);
    return out;
  };

  LinearSolveResult result;
  const RealField b = kernel.project_off(rhs);
  const double bnorm = l2_norm(b);
  result.phi = RealField(rhs.grid());
  if (bnorm == 0.0) return result;

  // Restarted on the true residual: the inner stopping test measures the
  // preconditioned norm, which can sit below the L2 one.
  RealField residual = b;
  double rel = 1.0;
  double inner_tol = options.tol;
  int total = 0;
  for (int round = 0; round <= options.restarts; ++round) {
    RealField dx;
    const int budget = options.max_iter - total;
    if (budget <= 0) break;
    total += minres(apply, precond, residual, dx, inner_tol, budget).iterations;
    result.phi += dx;
    kernel.project_off_inplace(result.phi);
    residual = b - apply(result.phi);
    rel = l2_norm(residual) / bnorm;
    if (rel <= options.tol) break;
    inner_tol = std::max(options.tol / rel, 1e-15);
  }
  result.iterations = total;
  result.residual = rel;
  if (!(rel <= options.tol)) {
    throw SolverError("solve_projected_linear: MINRES stopped at relative residual " +
                          std::to_string(rel),
                      rel, total);
  }

  const double phinorm = l2_norm(result.phi);
  for (const RealField& e : kernel.basis()) {
    if (std::abs(l2_inner(result.phi, e)) > 1e-8 * std::max(phinorm, 1e-300)) {
      throw std::runtime_error("solve_projected_linear: kernel contamination above 1e-8");
    }
  }
  const double h2s = sobolev_norm(result.phi, 2.0 * s);
  result.beta_meas = h2s > 0.0 ? l2_norm(apply(result.phi)) / h2s : 0.0;
  return result;
}

// ---------------------------------------------------------------------------
// Fixed point and reduced map

ReductionSolution fixed_point_solve(const ReductionProblem& p, const FixedPointOptions& options) {
  const RealField& u0 = p.ground().profile;
  const double alpha = p.alpha();
  const double order = 2.0 * p.s();
  const RealField s_ansatz = s_eps_apply(p, u0);

  ReductionSolution sol;
  sol.ansatz_residual = ansatz_residual(p).norm;
  sol.beta_meas = std::numeric_limits<double>::infinity();
  RealField phi(p.grid());
  double prev_step = 0.0;
  bool converged = false;
  int k = 0;
  while (k < options.max_iter) {
    ++k;
    RealField rhs = nonlinear_remainder(u0, phi, alpha);
    rhs += s_ansatz;
    rhs *= -1.0;
    LinearSolveResult lin = solve_projected_linear(p, rhs, options.linear);
    sol.linear_iterations += lin.iterations;
    if (lin.beta_meas > 0.0) sol.beta_meas = std::min(sol.beta_meas, lin.beta_meas);
    const double step = sobolev_norm(lin.phi - phi, order);
    phi = std::move(lin.phi);
    if (k >= 2 && prev_step > 0.0) {
      const double ratio = step / prev_step;
      sol.contraction_ratio = std::max(sol.contraction_ratio, ratio);
      if (ratio >= 1.0) {
        throw SolverError("fixed_point_solve: step ratio " + std::to_string(ratio) +
                              " >= 1, map is not contracting here",
                          ratio, k);
      }
    }
    prev_step = step;
    if (step <= options.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw SolverError("fixed_point_solve: no convergence in " + std::to_string(k) + " iterations",
                      prev_step, k);
  }
  if (!std::isfinite(sol.beta_meas)) sol.beta_meas = 0.0;

  const RealField full = s_eps_apply(p, u0 + phi);
  sol.full_residual = l2_norm(full);
  sol.projected_residual = l2_norm(p.kernel().project_off(full));
  sol.reduced_value = reduced_map(p, phi);
  sol.phi_norm_2s = sobolev_norm(phi, order);
  sol.theta_ratio = sol.ansatz_residual > 0.0 ? sol.phi_norm_2s / sol.ansatz_residual : 0.0;
  sol.iterations = k;
  sol.phi = std::move(phi);
  return sol;
}

Eigen::VectorXd reduced_map(const ReductionProblem& p, const RealField& phi) {
  const RealField full = s_eps_apply(p, p.ground().profile + phi);
  const auto& fields = p.ground().kernel_fields;
  Eigen::VectorXd out(static_cast<Eigen::Index>(fields.size()));
  for (std::size_t j = 0; j < fields.size(); ++j) {
    out[static_cast<Eigen::Index>(j)] = l2_inner(full, fields[j]) / p.eps();
  }
  return out;
}

Eigen::VectorXd limit_reduced_map(const GroundState& g, const PotentialSpec& spec,
                                  const Eigen::VectorXd& zhat) {
  if (!spec.normalized()) throw std::invalid_argument("limit_reduced_map: potential not normalized");
  if (zhat.size() != spec.dim) throw std::invalid_argument("limit_reduced_map: dimension mismatch");
  return -0.5 * g.mass * (hess_potential(spec, spec.z0) * zhat);
}

std::vector<Eigen::VectorXd> unit_ball_samples(int dim) {
  std::vector<Eigen::VectorXd> out;
  if (dim == 1) {
    for (int i = 0; i < 9; ++i) out.push_back(Eigen::VectorXd::Constant(1, -1.0 + 0.25 * i));
    return out;
  }
  out.push_back(Eigen::VectorXd::Zero(dim));
  for (int i = 0; i < 8; ++i) {
    const double angle = M_PI * i / 4.0;
    const double radius = i % 2 == 0 ? 1.0 : 0.5;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
    z[0] = radius * std::cos(angle);
    z[1] = radius * std::sin(angle);
    out.push_back(z);
  }
  return out;
}

namespace {

// Runs f(i) for i in [0, count) on up to `jobs` threads.
template <class F>
void parallel_for(std::size_t count, int jobs, F&& f) {
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(workers, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

ScaledMapTable scaled_map_study(std::shared_ptr<const GroundState> ground, const PotentialSpec& spec,
                                double eps, std::optional<double> nu,
                                const std::vector<Eigen::VectorXd>& samples,
                                const FixedPointOptions& options, int jobs,
                                const ReductionCaps& caps) {
  if (!ground) throw std::invalid_argument("scaled_map_study: missing ground state");
  ScaledMapTable table;
  table.eps = eps;
  table.nu = nu.value_or(admissible_range(ground->grid().dim, ground->s).nu_midpoint());
  const double scale = std::pow(eps, table.nu);
  table.rows.resize(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    ScaledMapRow& row = table.rows[i];
    row.zhat = samples[i];
    row.v0 = limit_reduced_map(*ground, spec, samples[i]);
    try {
      const ReductionProblem p(ground, spec, eps, spec.z0 + scale * samples[i], table.nu, caps);
      const ReductionSolution sol = fixed_point_solve(p, options);
      row.v_eps = sol.reduced_value / scale;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  table.complete = true;
  for (const auto& row : table.rows) {
    if (!row.ok) {
      table.complete = false;
      continue;
    }
    table.sup_discrepancy =
        std::max(table.sup_discrepancy, (row.v_eps - row.v0).lpNorm<Eigen::Infinity>());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Concentration point

namespace {

struct MapEval {
  Eigen::VectorXd value;
  ReductionSolution solution;
};

MapEval eval_map(const std::shared_ptr<const GroundState>& ground, const PotentialSpec& spec,
                 double eps, const Eigen::VectorXd& z, const RootOptions& options) {
  const ReductionProblem p(ground, spec, eps, z, std::nullopt, options.caps);
  MapEval e;
  e.solution = fixed_point_solve(p, options.fixed_point);
  e.value = e.solution.reduced_value;
  return e;
}

Eigen::MatrixXd jacobian(const std::shared_ptr<const GroundState>& ground, const PotentialSpec& spec,
                         double eps, const Eigen::VectorXd& z, const RootOptions& options) {
  const int n = static_cast<int>(z.size());
  const double step = eps * eps / 10.0;
  Eigen::MatrixXd jac(n, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), options.jobs, [&](std::size_t j) {
    try {
      Eigen::VectorXd zp = z, zm = z;
      zp[static_cast<Eigen::Index>(j)] += step;
      zm[static_cast<Eigen::Index>(j)] -= step;
      jac.col(static_cast<Eigen::Index>(j)) =
          (eval_map(ground, spec, eps, zp, options).value - eval_map(ground, spec, eps, zm, options).value) /
          (2.0 * step);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return jac;
}

bool inside_cap(const PotentialSpec& spec, const Eigen::VectorXd& z, const ReductionCaps& caps) {
  return (z - spec.z0).norm() <= caps.z_radius;
}

}  // namespace

ConcentrationPoint find_concentration_point(std::shared_ptr<const GroundState> ground,
                                            const PotentialSpec& spec, double eps,
                                            const Eigen::VectorXd& z_init,
                                            const RootOptions& options) {
  if (!ground) throw std::invalid_argument("find_concentration_point: missing ground state");
  ConcentrationPoint out;
  Eigen::VectorXd z = z_init;
  MapEval cur = eval_map(ground, spec, eps, z, options);
  std::ostringstream trail;
  bool stalled = false;
  int it = 0;
  while (cur.value.norm() > options.tol && it < options.max_iter) {
    ++it;
    out.jacobian = jacobian(ground, spec, eps, z, options);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(out.jacobian);
    if (!lu.isInvertible()) {
      stalled = true;
      break;
    }
    const Eigen::VectorXd dz = -lu.solve(cur.value);
    bool accepted = false;
    for (double damp = 1.0; damp >= 1.0 / 256.0; damp *= 0.5) {
      const Eigen::VectorXd trial = z + damp * dz;
      if (!inside_cap(spec, trial, options.caps)) continue;
      try {
        MapEval next = eval_map(ground, spec, eps, trial, options);
        if (next.value.norm() < cur.value.norm()) {
          z = trial;
          cur = std::move(next);
          accepted = true;
          break;
        }
      } catch (const SolverError&) {
      }
    }
    trail << " z=" << z.transpose() << " |s|=" << cur.value.norm() << ";";
    if (!accepted) {
      stalled = true;
      break;
    }
  }
  out.newton_iterations = it;

  if (cur.value.norm() > options.tol && z.size() == 1 && (stalled || it >= options.max_iter)) {
    // Bracket a sign change around the start, then bisect.
    out.used_bisection = true;
    const double z0 = z_init[0];
    auto value_at = [&](double t) {
      return eval_map(ground, spec, eps, Eigen::VectorXd::Constant(1, t), options);
    };
    double a = 0, b = 0;
    MapEval fa, fb;
    bool bracketed = false;
    for (double r = 0.01; r <= options.caps.z_radius; r *= 2.0) {
      a = z0 - r;
      b = z0 + r;
      if (!inside_cap(spec, Eigen::VectorXd::Constant(1, a), options.caps) ||
          !inside_cap(spec, Eigen::VectorXd::Constant(1, b), options.caps)) {
        break;
      }
      fa = value_at(a);
      fb = value_at(b);
      trail << " bracket [" << a << ", " << b << "] -> (" << fa.value[0] << ", " << fb.value[0] << ");";
      if (fa.value[0] * fb.value[0] <= 0.0) {
        bracketed = true;
        break;
      }
    }
    if (bracketed) {
      for (int k = 0; k < 200 && b - a > 1e-15; ++k) {
        const double m = 0.5 * (a + b);
        MapEval fm = value_at(m);
        const bool left = fa.value[0] * fm.value[0] <= 0.0;
        if (std::abs(fm.value[0]) < std::abs(cur.value[0]) || k == 0) {
          z = Eigen::VectorXd::Constant(1, m);
          cur = fm;
        }
        if (std::abs(fm.value[0]) <= options.tol) break;
        if (left) {
          b = m;
          fb = std::move(fm);
        } else {
          a = m;
          fa = std::move(fm);
        }
      }
    }
  }

  if (!(cur.value.norm() <= options.tol)) {
    throw SolverError("find_concentration_point: |s_eps| = " + std::to_string(cur.value.norm()) +
                          " above tolerance; samples:" + trail.str(),
                      cur.value.norm(), it);
  }
  if (out.jacobian.size() == 0) out.jacobian = jacobian(ground, spec, eps, z, options);
  out.z = z;
  out.reduced_value = cur.value;
  out.solution = std::move(cur.solution);
  return out;
}

AssembledSolution assemble_solution(const GroundState& g, const PotentialSpec& spec, double eps,
                                    const Eigen::VectorXd& z_eps, const RealField& phi) {
  const GridSpec& yg = g.grid();
  require_same_grid(yg, phi.grid(), "assemble_solution");
  if (!(eps > 0.0)) throw std::invalid_argument("assemble_solution: eps must be positive");
  if (z_eps.size() != yg.dim || spec.dim != yg.dim) {
    throw std::invalid_argument("assemble_solution: dimension mismatch");
  }
  const Eigen::VectorXd shift = z_eps / eps;
  if (!(shift.norm() < yg.half_width / 2.0)) {
    throw std::invalid_argument("assemble_solution: |z_eps|/eps wraps more than half the torus");
  }
  const RealField y_field = translate(g.profile + phi, as_span(shift));

  const GridSpec xg{yg.dim, eps * yg.half_width, yg.points};
  AssembledSolution out;
  out.field = RealField(xg, std::vector<double>(y_field.values().begin(), y_field.values().end()));

  RealField residual = frac_laplacian(out.field, g.s);
  residual *= std::pow(eps, 2.0 * g.s);
  Eigen::VectorXd x(yg.dim);
  const RealField v = RealField::sample(xg, [&](std::span<const double> pt) {
    for (int a = 0; a < yg.dim; ++a) x[a] = pt[a];
    return eval_potential(spec, x);
  });
  residual += hadamard(v, out.field);
  residual -= power_nonlinearity(out.field, g.alpha);
  out.full_residual = l2_norm(residual);
  out.norm = l2_norm(out.field);

  std::size_t best = 0;
  for (std::size_t i = 1; i < out.field.size(); ++i) {
    if (out.field[i] > out.field[best]) best = i;
  }
  const auto idx = unravel(xg, best);
  out.peak = Eigen::VectorXd(yg.dim);
  for (int a = 0; a < yg.dim; ++a) out.peak[a] = xg.node(idx[a]);
  return out;
}

}  // namespace fnls
