#include "fnls/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "fnls/errors.hpp"
#include "fnls/groundstate.hpp"

namespace fnls {

using nlohmann::json;

bool verb_needs_reduction(const std::string& verb) { return verb == "reduce" || verb == "study"; }

namespace {

// Collects violations while reading; a failed read leaves the default.
class Reader {
 public:
  std::vector<std::string> violations;

  void fail(const std::string& msg) { violations.push_back(msg); }

  template <class T>
  bool get(const json& obj, const char* key, const std::string& where, T& out, bool required) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) {
      if (required) fail(where + "." + key + ": required");
      return false;
    }
    try {
      out = obj.at(key).get<T>();
      return true;
    } catch (const json::exception&) {
      fail(where + "." + key + ": wrong type");
      return false;
    }
  }

  // A point is a number (1D) or an array of numbers.
  bool point(const json& v, const std::string& where, Eigen::VectorXd& out) {
    if (v.is_number()) {
      out = Eigen::VectorXd::Constant(1, v.get<double>());
      return true;
    }
    if (v.is_array() && !v.empty()) {
      out.resize(static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
          fail(where + ": coordinates must be numbers");
          return false;
        }
        out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
      }
      return true;
    }
    fail(where + ": expected a number or an array of numbers");
    return false;
  }
};

json point_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

PotentialSpec RunConfig::potential_spec() const {
  if (!potential) throw ConfigError("config: no potential section");
  const PotentialConfig& pc = *potential;
  PotentialSpec raw = make_potential(parse_potential_kind(pc.kind), grid.dim, pc.centers, pc.depths,
                                     pc.widths, pc.base);
  return normalize_at_critical_point(raw, pc.z0);
}

RunConfig parse_and_validate(const json& doc, const std::string& verb, const ConfigOverrides& overrides) {
  Reader rd;
  RunConfig cfg;
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object", {"config: not an object"});
  const bool reduction = verb_needs_reduction(verb);

  // grid
  const json grid = doc.value("grid", json::object());
  int n = 0;
  long long points = 0;
  double half_width = 0.0;
  const bool have_n = rd.get(grid, "n", "grid", n, true);
  const bool have_points = rd.get(grid, "N", "grid", points, true);
  const bool have_l = rd.get(grid, "L", "grid", half_width, true);
  if (have_n && (n < 1 || n > kMaxDim)) rd.fail("grid.n: must be 1, 2 or 3");
  if (have_points && (points < 8 || !is_power_of_two(static_cast<std::size_t>(points)))) rd.fail("grid.N: must be a power of two >= 8");
  if (have_l && !(half_width > 0.0)) rd.fail("grid.L: must be positive");
  const bool grid_ok = rd.violations.empty();
  if (grid_ok) cfg.grid = GridSpec{n, half_width, static_cast<std::size_t>(points)};

  // model
  const json model = doc.value("model", json::object());
  const bool have_s = rd.get(model, "s", "model", cfg.s, true);
  const bool have_alpha = rd.get(model, "alpha", "model", cfg.alpha, true);
  if (have_s && !(cfg.s > 0.0 && cfg.s < 1.0)) rd.fail("model.s: must lie in (0, 1)");
  AdmissibleRange range;
  if (grid_ok && have_s && have_alpha && cfg.s > 0.0 && cfg.s < 1.0) {
    range = admissible_range(n, cfg.s);
    if (!(cfg.alpha > 0.0 && cfg.alpha < range.alpha_max)) {
      rd.fail("model.alpha: must lie in (0, alpha_*) with alpha_* = " + std::to_string(range.alpha_max));
    }
    if (reduction) {
      if (!(cfg.s > range.s_min)) {
        rd.fail("model.s: " + verb + " needs s > max(1/2, n/4) = " + std::to_string(range.s_min));
      }
      if (!(cfg.alpha >= 1.0)) rd.fail("model.alpha: " + verb + " needs alpha >= 1");
    }
  }

  // potential
  if (doc.contains("potential") && !doc.at("potential").is_null()) {
    const json& pj = doc.at("potential");
    PotentialConfig pc;
    rd.get(pj, "kind", "potential", pc.kind, true);
    try {
      parse_potential_kind(pc.kind);
    } catch (const ConfigError&) {
      rd.fail("potential.kind: unknown kind '" + pc.kind + "'");
    }
    rd.get(pj, "depths", "potential", pc.depths, true);
    rd.get(pj, "widths", "potential", pc.widths, true);
    rd.get(pj, "base", "potential", pc.base, false);
    if (pj.contains("centers") && pj.at("centers").is_array()) {
      for (std::size_t i = 0; i < pj.at("centers").size(); ++i) {
        Eigen::VectorXd c;
        if (rd.point(pj.at("centers")[i], "potential.centers[" + std::to_string(i) + "]", c)) {
          if (grid_ok && c.size() != n) rd.fail("potential.centers[" + std::to_string(i) + "]: wrong dimension");
          pc.centers.push_back(c);
        }
      }
    } else {
      rd.fail("potential.centers: required array");
    }
    if (overrides.z0) {
      pc.z0 = Eigen::Map<const Eigen::VectorXd>(overrides.z0->data(),
                                                static_cast<Eigen::Index>(overrides.z0->size()));
    } else if (pj.contains("z0")) {
      rd.point(pj.at("z0"), "potential.z0", pc.z0);
    } else {
      rd.fail("potential.z0: required");
    }
    if (grid_ok && pc.z0.size() != 0 && pc.z0.size() != n) rd.fail("potential.z0: wrong dimension");
    if (pc.centers.size() != pc.depths.size() || pc.centers.size() != pc.widths.size()) {
      rd.fail("potential: centers, depths and widths must have equal length");
    }
    for (double w : pc.widths) {
      if (!(w > 0.0)) rd.fail("potential.widths: must be positive");
    }
    cfg.potential = pc;
  } else if (reduction) {
    rd.fail("potential: required for " + verb);
  }

  // solver
  const json solver = doc.value("solver", json::object());
  SolverConfig& sc = cfg.solver;
  rd.get(solver, "tol_ground", "solver", sc.tol_ground, false);
  rd.get(solver, "tol_fixed", "solver", sc.tol_fixed, false);
  rd.get(solver, "tol_root", "solver", sc.tol_root, false);
  rd.get(solver, "max_iter", "solver", sc.max_iter, false);
  rd.get(solver, "eps_max", "solver", sc.eps_max, false);
  rd.get(solver, "z_radius", "solver", sc.z_radius, false);
  double nu = 0.0;
  if (rd.get(solver, "nu", "solver", nu, false)) sc.nu = nu;
  if (!(sc.tol_ground > 0.0)) rd.fail("solver.tol_ground: must be positive");
  if (!(sc.tol_fixed > 0.0)) rd.fail("solver.tol_fixed: must be positive");
  if (!(sc.tol_root > 0.0)) rd.fail("solver.tol_root: must be positive");
  if (sc.max_iter < 1) rd.fail("solver.max_iter: must be >= 1");
  if (!(sc.eps_max > 0.0)) rd.fail("solver.eps_max: must be positive");
  if (!(sc.z_radius > 0.0)) rd.fail("solver.z_radius: must be positive");
  if (sc.nu && reduction && range.nu_nonempty() && !(*sc.nu > range.nu_lower && *sc.nu < range.nu_upper)) {
    rd.fail("solver.nu: must lie in (" + std::to_string(range.nu_lower) + ", " +
            std::to_string(range.nu_upper) + ")");
  }

  // study
  const json study = doc.value("study", json::object());
  rd.get(study, "eps_list", "study", cfg.study.eps_list, false);
  if (overrides.eps) cfg.study.eps_list = {*overrides.eps};
  if (study.contains("z_init") && !overrides.z0) {
    rd.point(study.at("z_init"), "study.z_init", cfg.study.z_init);
  } else if (cfg.potential) {
    cfg.study.z_init = cfg.potential->z0;
  }
  if (reduction) {
    const auto& eps = cfg.study.eps_list;
    if (eps.empty()) rd.fail("study.eps_list: must not be empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!(eps[i] > 0.0 && eps[i] <= sc.eps_max)) {
        rd.fail("study.eps_list[" + std::to_string(i) + "]: must lie in (0, " + std::to_string(sc.eps_max) + "]");
      }
      if (i > 0 && !(eps[i] < eps[i - 1])) rd.fail("study.eps_list: must be strictly decreasing");
    }
    if (cfg.potential && cfg.study.z_init.size() == cfg.potential->z0.size() &&
        !((cfg.study.z_init - cfg.potential->z0).norm() <= sc.z_radius)) {
      rd.fail("study.z_init: farther than solver.z_radius from potential.z0");
    }
  }

  // output
  const json output = doc.value("output", json::object());
  rd.get(output, "directory", "output", cfg.output.directory, false);
  rd.get(output, "formats", "output", cfg.output.formats, false);
  if (overrides.out) cfg.output.directory = *overrides.out;
  static const std::set<std::string> known{"fnsf", "json", "csv"};
  for (const auto& f : cfg.output.formats) {
    if (!known.count(f)) rd.fail("output.formats: unknown format '" + f + "'");
  }

  // The potential must admit the normalization the reduction relies on.
  if (rd.violations.empty() && cfg.potential) {
    try {
      (void)cfg.potential_spec();
    } catch (const ConfigError& e) {
      rd.fail(e.what());
    }
  }

  if (!rd.violations.empty()) {
    throw ConfigError("invalid config (" + std::to_string(rd.violations.size()) + " violation" +
                          (rd.violations.size() == 1 ? "" : "s") + ")",
                      rd.violations);
  }

  json& r = cfg.resolved;
  r["grid"] = {{"n", cfg.grid.dim}, {"N", cfg.grid.points}, {"L", cfg.grid.half_width}};
  r["model"] = {{"s", cfg.s}, {"alpha", cfg.alpha}};
  if (cfg.potential) {
    json centers = json::array();
    for (const auto& c : cfg.potential->centers) centers.push_back(point_json(c));
    r["potential"] = {{"kind", cfg.potential->kind},     {"centers", centers},
                      {"depths", cfg.potential->depths}, {"widths", cfg.potential->widths},
                      {"z0", point_json(cfg.potential->z0)}, {"base", cfg.potential->base}};
  }
  r["solver"] = {{"tol_ground", sc.tol_ground}, {"tol_fixed", sc.tol_fixed}, {"tol_root", sc.tol_root},
                 {"max_iter", sc.max_iter},     {"eps_max", sc.eps_max},     {"z_radius", sc.z_radius}};
  r["solver"]["nu"] = sc.nu ? json(*sc.nu) : json(nullptr);
  r["study"] = {{"eps_list", cfg.study.eps_list}};
  r["study"]["z_init"] = cfg.study.z_init.size() ? point_json(cfg.study.z_init) : json(nullptr);
  r["output"] = {{"directory", cfg.output.directory}, {"formats", cfg.output.formats}};
  return cfg;
}

RunConfig parse_and_validate(const std::filesystem::path& path, const std::string& verb,
                             const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string(), {"config: cannot open " + path.string()});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: invalid JSON", {std::string("config: ") + e.what()});
  }
  return parse_and_validate(doc, verb, overrides);
}

}  // namespace fnls
