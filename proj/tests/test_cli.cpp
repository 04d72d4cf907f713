#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "fnls/commands.hpp"
#include "fnls/config.hpp"
#include "fnls/errors.hpp"
#include "fnls/fnsf.hpp"
#include "support.hpp"

using namespace fnls;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Small 1D case that runs in about a second.
json small_case() {
  return json::parse(R"({
    "grid": {"n": 1, "N": 1024, "L": 64.0},
    "model": {"s": 0.75, "alpha": 1.0},
    "potential": {"kind": "gaussian_well", "centers": [[0.0]], "depths": [1.0], "widths": [1.0],
                  "z0": [0.0], "base": 2.0},
    "solver": {"tol_ground": 1e-10, "tol_fixed": 1e-9, "tol_root": 1e-8, "max_iter": 2000},
    "study": {"eps_list": [0.2, 0.1], "z_init": [0.05]},
    "output": {"directory": "out", "formats": ["fnsf", "json", "csv"]}
  })");
}

json three_d(double s, double alpha) {
  json doc = small_case();
  doc["grid"] = {{"n", 3}, {"N", 16}, {"L", 8.0}};
  doc["model"] = {{"s", s}, {"alpha", alpha}};
  doc["potential"]["centers"] = json::array({json::array({0.0, 0.0, 0.0})});
  doc["potential"]["z0"] = json::array({0.0, 0.0, 0.0});
  doc["study"]["z_init"] = json::array({0.0, 0.0, 0.0});
  return doc;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("fnls_cli_" + tag + "_" + std::to_string(std::rand()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const json& doc) const {
    const fs::path p = path / name;
    std::ofstream(p) << doc.dump(2);
    return p;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::string& verb, const CommandFlags& flags) {
  std::ostringstream out, err;
  const int code = run_command(verb, flags, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> violations_of(const json& doc, const std::string& verb, const ConfigOverrides& o = {}) {
  try {
    (void)parse_and_validate(doc, verb, o);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("admissibility in parse_and_validate") {
  CHECK_NOTHROW(parse_and_validate(three_d(0.9, 2.9), "reduce"));
  CHECK(mentions(violations_of(three_d(0.9, 3.0), "reduce"), "model.alpha"));
  CHECK(mentions(violations_of(three_d(0.9, 3.0), "groundstate"), "model.alpha"));

  json low = small_case();
  low["model"]["s"] = 0.45;
  CHECK(mentions(violations_of(low, "reduce"), "model.s"));
  CHECK(mentions(violations_of(low, "study"), "model.s"));
  CHECK_NOTHROW(parse_and_validate(low, "groundstate"));

  json sub = small_case();
  sub["model"]["alpha"] = 0.5;
  CHECK(mentions(violations_of(sub, "reduce"), "alpha >= 1"));
  CHECK_NOTHROW(parse_and_validate(sub, "groundstate"));

  // groundstate does not need a potential
  json bare = small_case();
  bare.erase("potential");
  CHECK_NOTHROW(parse_and_validate(bare, "groundstate"));
  CHECK(mentions(violations_of(bare, "reduce"), "potential"));
}

TEST_CASE("every violation is reported") {
  json doc = small_case();
  doc["grid"]["N"] = 1000;
  doc["solver"]["tol_fixed"] = -1.0;
  doc["study"]["eps_list"] = {0.1, 0.1};
  doc["output"]["formats"] = {"png"};
  const auto v = violations_of(doc, "study");
  CHECK(v.size() >= 4);
  CHECK(mentions(v, "grid.N"));
  CHECK(mentions(v, "solver.tol_fixed"));
  CHECK(mentions(v, "strictly decreasing"));
  CHECK(mentions(v, "output.formats"));

  json far = small_case();
  far["study"]["eps_list"] = {0.3};
  CHECK(mentions(violations_of(far, "reduce"), "study.eps_list[0]"));

  json missing = small_case();
  missing["model"].erase("s");
  CHECK(!violations_of(missing, "groundstate").empty());

  json notcritical = small_case();
  notcritical["potential"]["z0"] = {0.4};
  notcritical["study"]["z_init"] = {0.4};
  CHECK(!violations_of(notcritical, "reduce").empty());
}

TEST_CASE("flags win over the file") {
  ConfigOverrides o;
  o.eps = 0.05;
  o.out = "elsewhere";
  RunConfig cfg = parse_and_validate(small_case(), "study", o);
  REQUIRE(cfg.study.eps_list.size() == 1);
  CHECK(cfg.study.eps_list[0] == 0.05);
  CHECK(cfg.output.directory == "elsewhere");
  CHECK(cfg.resolved["output"]["directory"] == "elsewhere");
  CHECK(cfg.resolved["study"]["eps_list"] == json::array({0.05}));

  // --z0 replaces potential.z0 and the default z_init
  json shifted = small_case();
  shifted["potential"]["centers"] = {{0.25}};
  ConfigOverrides z;
  z.z0 = std::vector<double>{0.25};
  RunConfig moved = parse_and_validate(shifted, "reduce", z);
  CHECK(moved.potential->z0[0] == 0.25);
  CHECK(moved.study.z_init[0] == 0.25);
}

TEST_CASE("shipped configs are valid") {
  for (const char* name : {"gaussian_well_1d.json", "asymmetric_well_1d.json", "double_gaussian_2d.json"}) {
    CHECK_NOTHROW(parse_and_validate(fs::path(FNLS_CONFIG_DIR) / name, "study"));
  }
  CHECK_NOTHROW(parse_and_validate(fs::path(FNLS_CONFIG_DIR) / "benjamin_ono.json", "groundstate"));
  CHECK(mentions(violations_of(json::parse(slurp(fs::path(FNLS_CONFIG_DIR) / "benjamin_ono.json")), "reduce"),
                 "model.s"));
}

TEST_CASE("exit codes") {
  TempDir tmp("codes");

  json bad = small_case();
  // alpha_*(0.3, 1) = 3, excluded
  bad["model"] = {{"s", 0.3}, {"alpha", 3.0}};
  CommandFlags f;
  f.config = tmp.write("bad.json", bad).string();
  Run r = run("groundstate", f);
  CHECK(r.code == kExitInvalid);
  const json diag = json::parse(r.err);
  CHECK(diag["exit_code"] == 2);
  CHECK(!diag["violations"].empty());

  CommandFlags missing;
  missing.config = (tmp.path / "nope.json").string();
  CHECK(run("reduce", missing).code == kExitInvalid);
  CHECK(run("frobnicate", f).code == kExitInvalid);

  // a stored field whose (s, alpha) is beyond alpha_*: admissibility at runtime
  const GridSpec g = build_grid(1, 16.0, 64);
  write_fnsf(tmp.path / "super.fnsf", fnls::testing::random_smooth_field(g, 1), 0.2, 2.0, "ground_state");
  CommandFlags sp;
  sp.input = (tmp.path / "super.fnsf").string();
  r = run("spectrum", sp);
  CHECK(r.code == kExitAdmissibility);
  CHECK(json::parse(r.err)["error"] == "admissibility");

  // iteration cap too small for Petviashvili
  json capped = small_case();
  capped["solver"]["max_iter"] = 1;
  CommandFlags c;
  c.config = tmp.write("capped.json", capped).string();
  c.out_dir = tmp.path.string();
  r = run("groundstate", c);
  CHECK(r.code == kExitNoConvergence);
  const json sd = json::parse(r.err);
  CHECK(sd["error"] == "solver");
  CHECK(sd["iterations"] == 1);
  CHECK(sd["achieved"].get<double>() > 1e-10);

  CommandFlags lap;
  lap.input = (tmp.path / "missing.fnsf").string();
  lap.out = (tmp.path / "x.fnsf").string();
  CHECK(run("laplacian", lap).code == kExitInvalid);
}

TEST_CASE("groundstate, spectrum and laplacian") {
  TempDir tmp("gs");
  CommandFlags f;
  f.config = tmp.write("case.json", small_case()).string();
  f.out = (tmp.path / "u0.fnsf").string();
  REQUIRE(run("groundstate", f).code == kExitOk);
  REQUIRE(fs::exists(tmp.path / "u0.fnsf"));
  REQUIRE(fs::exists(tmp.path / "u0.json"));
  const json report = json::parse(slurp(tmp.path / "u0.json"));
  // the stopping rule is relative to ||u0||_0
  CHECK(report["relative_residual"].get<double>() <= 1e-10);
  CHECK(report["residual"].get<double>() <= 1e-10 * std::sqrt(report["mass"].get<double>()));
  CHECK(report["mass"].get<double>() > 0.0);
  for (const char* key : {"decay_slope", "iterations", "config"}) CHECK(report.contains(key));
  CHECK(report["config"]["grid"]["N"] == 1024);

  // identical config, identical bytes
  const std::string first = slurp(tmp.path / "u0.fnsf");
  const std::string first_json = slurp(tmp.path / "u0.json");
  REQUIRE(run("groundstate", f).code == kExitOk);
  CHECK(slurp(tmp.path / "u0.fnsf") == first);
  CHECK(slurp(tmp.path / "u0.json") == first_json);

  const FnsfFile stored = read_fnsf(tmp.path / "u0.fnsf");
  CHECK(stored.s == 0.75);
  CHECK(stored.header["config"]["model"]["alpha"] == 1.0);

  CommandFlags sp;
  sp.input = f.out;
  sp.eigen_count = 4;
  Run r = run("spectrum", sp);
  REQUIRE(r.code == kExitOk);
  const json spec = json::parse(r.out);
  CHECK(spec["morse_index"] == 1);
  CHECK(spec["eigenvalues"].size() == 4);
  CHECK(spec["kernel_residuals"].size() == 1);
  CHECK(spec["gap"]["h2s"].get<double>() > 0.0);
  sp.eigen_count = 17;
  CHECK(run("spectrum", sp).code == kExitInvalid);

  CommandFlags lap;
  lap.input = f.out;
  lap.out = (tmp.path / "lap.fnsf").string();
  lap.order = 0.5;
  REQUIRE(run("laplacian", lap).code == kExitOk);
  const FnsfFile applied = read_fnsf(lap.out);
  CHECK(fnls::testing::max_abs_diff(applied.field, frac_laplacian(stored.field, 0.5)) == 0.0);
  lap.order = 2.5;
  CHECK(run("laplacian", lap).code == kExitInvalid);
}

TEST_CASE("reduce and study") {
  TempDir tmp("study");
  CommandFlags f;
  f.config = tmp.write("case.json", small_case()).string();
  f.out_dir = tmp.path.string();
  f.eps = 0.1;
  Run r = run("reduce", f);
  REQUIRE(r.code == kExitOk);
  const json red = json::parse(r.out);
  CHECK(std::abs(red["z_eps"][0].get<double>()) <= 1e-6);
  CHECK(red["contraction_ratio"].get<double>() < 1.0);
  CHECK(red["config"]["study"]["eps_list"] == json::array({0.1}));

  f.eps.reset();
  r = run("study", f);
  REQUIRE(r.code == kExitOk);
  const std::string csv = slurp(tmp.path / "study.csv");
  CHECK(csv == r.out);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "eps,z_eps,phi_norm_2s,ansatz_residual,full_residual,contraction_ratio,sup_verr\r");
  std::vector<double> phi;
  for (std::string line; std::getline(lines, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    phi.push_back(std::stod(cells[2]));
  }
  REQUIRE(phi.size() == 2);
  CHECK(phi[1] < phi[0]);
  const json sidecar = json::parse(slurp(tmp.path / "study.json"));
  CHECK(sidecar["rows"].size() == 2);
  CHECK(sidecar.contains("config"));

  // the worker pool does not change a single byte
  const std::string json_serial = slurp(tmp.path / "study.json");
  f.jobs = 4;
  REQUIRE(run("study", f).code == kExitOk);
  CHECK(slurp(tmp.path / "study.csv") == csv);
  CHECK(slurp(tmp.path / "study.json") == json_serial);
}

TEST_CASE("binary") {
  TempDir tmp("bin");
  const std::string exe = FNLS_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(exe + " --help") == 0);
  CHECK(status(exe) == 2);
  CHECK(status(exe + " groundstate") == 2);
  json bad = small_case();
  bad["model"]["s"] = 1.5;
  CHECK(status(exe + " groundstate -c " + tmp.write("bad.json", bad).string()) == 2);
  CHECK(status(exe + " study -c " + tmp.write("ok.json", small_case()).string() + " --jobs 0") == 2);
  CHECK(status(exe + " groundstate -c " + tmp.path.string() + "/ok.json -o " + tmp.path.string() + "/u.fnsf") == 0);
  CHECK(fs::exists(tmp.path / "u.json"));
}
