#include "fnls/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>

#include "fnls/config.hpp"
#include "fnls/errors.hpp"
#include "fnls/fnsf.hpp"
#include "fnls/fracops.hpp"
#include "fnls/groundstate.hpp"
#include "fnls/linearized.hpp"
#include "fnls/reduction.hpp"

namespace fnls {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

bool wants(const RunConfig& cfg, const char* format) {
  return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) != cfg.output.formats.end();
}

// Explicit -o wins; otherwise the default name inside the output directory.
fs::path output_path(const CommandFlags& flags, const RunConfig* cfg, const char* default_name) {
  fs::path p = !flags.out.empty() ? fs::path(flags.out)
                                  : fs::path(cfg ? cfg->output.directory : ".") / default_name;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

fs::path sidecar(fs::path p) { return p.replace_extension(".json"); }

ConfigOverrides overrides_of(const CommandFlags& flags) {
  ConfigOverrides o;
  o.eps = flags.eps;
  o.z0 = flags.z0;
  o.out = flags.out_dir;
  return o;
}

RunConfig load_config(const CommandFlags& flags, const std::string& verb) {
  if (flags.config.empty()) throw ConfigError("missing -c <config.json>", {"-c: required for " + verb});
  return parse_and_validate(fs::path(flags.config), verb, overrides_of(flags));
}

std::shared_ptr<const GroundState> ground_state_for(const RunConfig& cfg) {
  GroundStateOptions opts;
  opts.tol = cfg.solver.tol_ground;
  opts.max_iter = cfg.solver.max_iter;
  return std::make_shared<const GroundState>(
      compute_ground_state(cfg.grid, cfg.s, cfg.alpha, gaussian_guess(cfg.grid), opts));
}

RootOptions root_options(const RunConfig& cfg, int jobs) {
  RootOptions ro;
  ro.tol = cfg.solver.tol_root;
  ro.fixed_point.tol = cfg.solver.tol_fixed;
  ro.caps.eps_max = cfg.solver.eps_max;
  ro.caps.z_radius = cfg.solver.z_radius;
  ro.jobs = jobs;
  return ro;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_groundstate(const CommandFlags& flags, std::ostream& out) {
  const RunConfig cfg = load_config(flags, "groundstate");
  const auto gs = ground_state_for(cfg);
  json report = {{"residual", gs->residual},
                 {"relative_residual", gs->residual / std::sqrt(gs->mass)},
                 {"mass", gs->mass},
                 {"decay_slope", gs->decay_slope},
                 {"decay_expected", -(cfg.grid.dim + 2.0 * cfg.s)},
                 {"super_polynomial", gs->decay.super_polynomial},
                 {"iterations", gs->iterations},
                 {"config", cfg.resolved}};
  const fs::path path = output_path(flags, &cfg, "u0.fnsf");
  if (wants(cfg, "fnsf")) {
    write_fnsf(path, gs->profile, cfg.s, cfg.alpha, "ground_state", {{"config", cfg.resolved}});
    report["fnsf"] = path.string();
  }
  if (wants(cfg, "json")) write_json(sidecar(path), report);
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_spectrum(const CommandFlags& flags, std::ostream& out) {
  if (flags.input.empty()) throw ConfigError("missing -g <u0.fnsf>", {"-g: required for spectrum"});
  if (flags.eigen_count < 1 || flags.eigen_count > 16) {
    throw ConfigError("bad -k", {"-k: must lie in [1, 16]"});
  }
  const FnsfFile file = read_fnsf(flags.input);
  require_limit_admissible(file.field.grid().dim, file.s, file.alpha);
  const GroundState g = ground_state_from_profile(file.field, file.s, file.alpha);
  const LinearizedOperator op = LinearizedOperator::limit(g);
  const int n = g.grid().dim;

  EigenOptions opts;
  opts.count = std::min(16, std::max(flags.eigen_count, n + 3));
  const EigenResult eig = extremal_eigen(op, opts);
  const double zero_tol = 1e-4;
  int morse = 0;
  for (int j = 0; j < n + 3; ++j) morse += eig.eigenvalues[static_cast<std::size_t>(j)] < -zero_tol;

  json kernel_res = json::array();
  for (const RealField& d : g.kernel_fields) kernel_res.push_back(l2_norm(op.apply(d)) / l2_norm(d));
  const KernelProjector kernel(g.kernel_fields);
  const SpectralGapResult gap = spectral_gap(op, kernel);

  json report = {
      {"eigenvalues", std::vector<double>(eig.eigenvalues.begin(), eig.eigenvalues.begin() + flags.eigen_count)},
      {"residuals", std::vector<double>(eig.residuals.begin(), eig.residuals.begin() + flags.eigen_count)},
      {"morse_index", morse},
      {"zero_tol", zero_tol},
      {"kernel_residuals", kernel_res},
      {"gap", {{"h2s", gap.h2s_gap}, {"l2", gap.l2_gap}, {"deflated_eigenvalues", gap.eigenvalues}}},
      {"iterations", eig.iterations},
      {"source", file.header}};
  if (!flags.out.empty()) write_json(output_path(flags, nullptr, "spectrum.json"), report);
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_laplacian(const CommandFlags& flags, std::ostream& out) {
  if (flags.input.empty()) throw ConfigError("missing -i <in.fnsf>", {"-i: required for laplacian"});
  if (flags.out.empty()) throw ConfigError("missing -o <out.fnsf>", {"-o: required for laplacian"});
  const FnsfFile file = read_fnsf(flags.input);
  const double order = flags.order.value_or(file.s);
  const RealField result = frac_laplacian(file.field, order);
  const json extra = {{"order", order}, {"source", file.header}};
  write_fnsf(flags.out, result, file.s, file.alpha, "frac_laplacian", extra);
  out << json{{"fnsf", flags.out}, {"order", order}, {"max_abs", result.max_abs()}}.dump(2) << '\n';
  return kExitOk;
}

int cmd_reduce(const CommandFlags& flags, std::ostream& out) {
  const RunConfig cfg = load_config(flags, "reduce");
  const PotentialSpec spec = cfg.potential_spec();
  const auto gs = ground_state_for(cfg);
  const double eps = cfg.study.eps_list.front();
  const ConcentrationPoint cp = find_concentration_point(gs, spec, eps, cfg.study.z_init, root_options(cfg, flags.jobs));
  const AssembledSolution v = assemble_solution(*gs, spec, eps, cp.z, cp.solution.phi);
  const ReductionSolution& sol = cp.solution;
  const double nu = cfg.solver.nu.value_or(admissible_range(cfg.grid.dim, cfg.s).nu_midpoint());

  json report = {{"eps", eps},
                 {"nu", nu},
                 {"z_eps", vec_json(cp.z)},
                 {"reduced_value", vec_json(cp.reduced_value)},
                 {"jacobian", mat_json(cp.jacobian)},
                 {"newton_iterations", cp.newton_iterations},
                 {"used_bisection", cp.used_bisection},
                 {"phi_norm_2s", sol.phi_norm_2s},
                 {"ansatz_residual", sol.ansatz_residual},
                 {"projected_residual", sol.projected_residual},
                 {"full_residual", sol.full_residual},
                 {"contraction_ratio", sol.contraction_ratio},
                 {"fixed_point_iterations", sol.iterations},
                 {"beta_meas", sol.beta_meas},
                 {"theta_ratio", sol.theta_ratio},
                 {"solution_residual", v.full_residual},
                 {"solution_relative_residual", v.full_residual / v.norm},
                 {"peak", vec_json(v.peak)},
                 {"config", cfg.resolved}};
  const fs::path path = output_path(flags, &cfg, "solution.fnsf");
  if (wants(cfg, "fnsf")) {
    write_fnsf(path, v.field, cfg.s, cfg.alpha, "solution",
               {{"eps", eps}, {"z_eps", vec_json(cp.z)}, {"config", cfg.resolved}});
    report["fnsf"] = path.string();
  }
  if (wants(cfg, "json")) write_json(sidecar(path), report);
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_study(const CommandFlags& flags, std::ostream& out) {
  const RunConfig cfg = load_config(flags, "study");
  const PotentialSpec spec = cfg.potential_spec();
  const auto gs = ground_state_for(cfg);
  const RootOptions ro = root_options(cfg, flags.jobs);
  const auto samples = unit_ball_samples(cfg.grid.dim);

  std::string csv = "eps,z_eps,phi_norm_2s,ansatz_residual,full_residual,contraction_ratio,sup_verr\r\n";
  json rows = json::array();
  for (double eps : cfg.study.eps_list) {
    const ConcentrationPoint cp = find_concentration_point(gs, spec, eps, cfg.study.z_init, ro);
    const ScaledMapTable table = scaled_map_study(gs, spec, eps, cfg.solver.nu, samples, ro.fixed_point,
                                                  flags.jobs, ro.caps);
    const ReductionSolution& sol = cp.solution;
    std::string z_cell;
    for (Eigen::Index i = 0; i < cp.z.size(); ++i) z_cell += (i ? ";" : "") + csv_number(cp.z[i]);
    const double sup = table.complete ? table.sup_discrepancy : std::nan("");
    csv += csv_number(eps) + "," + z_cell + "," + csv_number(sol.phi_norm_2s) + "," +
           csv_number(sol.ansatz_residual) + "," + csv_number(sol.full_residual) + "," +
           csv_number(sol.contraction_ratio) + "," + csv_number(sup) + "\r\n";
    json failed = json::array();
    for (const auto& row : table.rows) {
      if (!row.ok) failed.push_back({{"zhat", vec_json(row.zhat)}, {"error", row.error}});
    }
    rows.push_back({{"eps", eps},
                    {"nu", table.nu},
                    {"z_eps", vec_json(cp.z)},
                    {"reduced_value", vec_json(cp.reduced_value)},
                    {"beta_meas", sol.beta_meas},
                    {"theta_ratio", sol.theta_ratio},
                    {"projected_residual", sol.projected_residual},
                    {"sup_verr", table.complete ? json(table.sup_discrepancy) : json(nullptr)},
                    {"failed_samples", failed}});
  }

  const json report = {{"rows", rows}, {"config", cfg.resolved}};
  const fs::path path = output_path(flags, &cfg, "study.csv");
  if (wants(cfg, "csv")) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << csv;
  }
  if (wants(cfg, "json")) write_json(sidecar(path), report);
  out << csv;
  return kExitOk;
}

int fail(std::ostream& err, int code, const char* kind, const std::string& message, json extra = json::object()) {
  json doc = {{"status", "error"}, {"exit_code", code}, {"error", kind}, {"message", message}};
  doc.update(extra);
  err << doc.dump(2) << '\n';
  return code;
}

}  // namespace

int run_command(const std::string& verb, const CommandFlags& flags, std::ostream& out, std::ostream& err) {
  try {
    if (verb == "groundstate") return cmd_groundstate(flags, out);
    if (verb == "spectrum") return cmd_spectrum(flags, out);
    if (verb == "laplacian") return cmd_laplacian(flags, out);
    if (verb == "reduce") return cmd_reduce(flags, out);
    if (verb == "study") return cmd_study(flags, out);
    return fail(err, kExitInvalid, "usage", "unknown verb '" + verb + "'");
  } catch (const ConfigError& e) {
    return fail(err, kExitInvalid, "config", e.what(), {{"violations", e.violations()}});
  } catch (const AdmissibilityError& e) {
    return fail(err, kExitAdmissibility, "admissibility", e.what());
  } catch (const SolverError& e) {
    return fail(err, kExitNoConvergence, "solver", e.what(),
                {{"achieved", e.achieved()}, {"iterations", e.iterations()}});
  } catch (const std::exception& e) {
    return fail(err, kExitInvalid, "input", e.what());
  }
}

}  // namespace fnls
