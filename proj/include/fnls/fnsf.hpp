// FNSF field files: one line of compact JSON
//   {"n", "N", "L", "s", "alpha", "kind", ...}
// terminated by '\n', followed by N^n little-endian float64 values in
// row-major order (last axis fastest). Extra header keys are preserved.
#pragma once

#include <filesystem>
#include <string>

#include "fnls/grid.hpp"
#include "json.hpp"

namespace fnls {

struct FnsfFile {
  RealField field;
  double s = 0.0;
  double alpha = 0.0;
  std::string kind;
  nlohmann::json header;  // full header including any extra keys
};

/// `extra` keys are merged into the header; the six required keys always
/// reflect the field and arguments.
void write_fnsf(const std::filesystem::path& path, const RealField& field, double s, double alpha,
                const std::string& kind, const nlohmann::json& extra = nlohmann::json::object());

/// Throws std::runtime_error on malformed headers, truncated payloads or a
/// grid the header does not describe.
FnsfFile read_fnsf(const std::filesystem::path& path);

}  // namespace fnls
