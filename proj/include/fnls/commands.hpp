// Verb dispatch for the fnls command-line tool.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fnls {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 2,
  kExitNoConvergence = 3,
  kExitAdmissibility = 4,
};

struct CommandFlags {
  std::string config;  // -c
  std::string input;   // -g / -i: FNSF input
  std::string out;     // -o: output file
  std::optional<double> eps;
  std::optional<std::vector<double>> z0;
  std::optional<std::string> out_dir;  // --out
  int eigen_count = 4;                 // -k
  int jobs = 1;
  std::optional<double> order;  // laplacian order; defaults to the file's s
};

/// Runs groundstate | spectrum | laplacian | reduce | study. Reports go to
/// `out`; failures are written to `err` as one JSON object and mapped to
/// exit codes 2 (invalid input), 3 (no convergence), 4 (admissibility).
int run_command(const std::string& verb, const CommandFlags& flags, std::ostream& out,
                std::ostream& err);

}  // namespace fnls
