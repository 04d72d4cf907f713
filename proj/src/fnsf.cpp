#include "fnls/fnsf.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace fnls {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

}  // namespace

void write_fnsf(const std::filesystem::path& path, const RealField& field, double s, double alpha,
                const std::string& kind, const nlohmann::json& extra) {
  const GridSpec& g = field.grid();
  nlohmann::json header = extra.is_object() ? extra : nlohmann::json::object();
  header["n"] = g.dim;
  header["N"] = g.points;
  header["L"] = g.half_width;
  header["s"] = s;
  header["alpha"] = alpha;
  header["kind"] = kind;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_fnsf: cannot open " + path.string());
  const std::string line = header.dump();
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.put('\n');
  std::vector<std::uint64_t> raw(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    raw[i] = to_little(std::bit_cast<std::uint64_t>(field[i]));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  if (!out) throw std::runtime_error("write_fnsf: write failed for " + path.string());
}

FnsfFile read_fnsf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_fnsf: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_fnsf: missing header line");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("read_fnsf: malformed header: ") + e.what());
  }
  for (const char* key : {"n", "N", "L", "s", "alpha", "kind"}) {
    if (!header.contains(key)) throw std::runtime_error(std::string("read_fnsf: header lacks ") + key);
  }
  const GridSpec g = build_grid(header["n"].get<int>(), header["L"].get<double>(),
                                header["N"].get<std::size_t>());

  std::vector<std::uint64_t> raw(g.size());
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t))) {
    throw std::runtime_error("read_fnsf: truncated payload in " + path.string());
  }
  std::vector<double> values(g.size());
  for (std::size_t i = 0; i < raw.size(); ++i) values[i] = std::bit_cast<double>(to_little(raw[i]));

  FnsfFile f{RealField(g, std::move(values)), header["s"].get<double>(),
             header["alpha"].get<double>(), header["kind"].get<std::string>(), header};
  if (!f.field.all_finite()) throw std::runtime_error("read_fnsf: non-finite values in payload");
  return f;
}

}  // namespace fnls
