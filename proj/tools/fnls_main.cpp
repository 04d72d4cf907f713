#include <iostream>

#include "CLI11.hpp"
#include "fnls/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fractional NLS ground states, spectra and concentration points"};
  app.require_subcommand(1);

  fnls::CommandFlags flags;
  double eps = 0.0;
  std::vector<double> z0;
  std::string out_dir;
  double order = 0.0;

  auto* gs = app.add_subcommand("groundstate", "Compute u0 and write FNSF + JSON diagnostics");
  gs->add_option("-c,--config", flags.config, "Config JSON")->required();
  gs->add_option("-o", flags.out, "Output FNSF path");
  gs->add_option("--out", out_dir, "Output directory");

  auto* sp = app.add_subcommand("spectrum", "Lowest eigenvalues of L0 for a stored ground state");
  sp->add_option("-g,--ground", flags.input, "Ground state FNSF")->required();
  sp->add_option("-k,--count", flags.eigen_count, "Number of eigenvalues (1..16)");
  sp->add_option("-o", flags.out, "Also write the report here");

  auto* lp = app.add_subcommand("laplacian", "Apply (-Delta)^sigma to an FNSF field");
  lp->add_option("-i,--input", flags.input, "Input FNSF")->required();
  lp->add_option("-o", flags.out, "Output FNSF")->required();
  lp->add_option("--order", order, "sigma in (0, 2]; defaults to the file's s");

  auto* rd = app.add_subcommand("reduce", "Concentration point and solution for one eps");
  auto* st = app.add_subcommand("study", "eps sweep to CSV");
  for (auto* sub : {rd, st}) {
    sub->add_option("-c,--config", flags.config, "Config JSON")->required();
    sub->add_option("-o", flags.out, "Output path");
    sub->add_option("--eps", eps, "Single eps, overrides study.eps_list");
    sub->add_option("--z0", z0, "Critical point z0, overrides potential.z0")->expected(1, 3);
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--jobs", flags.jobs, "Worker threads")->check(CLI::Range(1, 64));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fnls::kExitInvalid;
  }

  auto* active = app.get_subcommands().front();
  auto given = [active](const char* name) {
    const CLI::Option* opt = active->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--eps")) flags.eps = eps;
  if (given("--z0")) flags.z0 = z0;
  if (given("--out")) flags.out_dir = out_dir;
  if (given("--order")) flags.order = order;
  return fnls::run_command(active->get_name(), flags, std::cout, std::cerr);
}
