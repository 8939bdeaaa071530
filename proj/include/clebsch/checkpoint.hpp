#pragma once

// Self-describing lattice checkpoint container.
//
// Byte layout, in order:
//   bytes 0..7    magic "CLBLATT1"
//   bytes 8..11   format version, little-endian uint32 (currently 1)
//   bytes 12..15  header byte length L, little-endian uint32
//   bytes 16..16+L-1   UTF-8 JSON header:
//       {"group", "representation", "n", "a", "t", "dt",
//        "potential": {"mu", "v"}}
//   then the arrays A, D, phi, pi, A0 as raw little-endian IEEE f64 in
//   site-major, direction-minor, component-innermost order (site index
//   (x*n + y)*n + z), with no padding between arrays.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clebsch/lattice.hpp"
#include "clebsch/lie.hpp"

namespace clebsch {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

struct Checkpoint {
  LatticeState state;
  double dt = 0;
  HiggsPotential pot;
};

namespace detail {

inline const char* checkpoint_magic() { return "CLBLATT1"; }

inline void write_bytes(std::ofstream& f, const void* p, std::size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::ifstream& f, void* p, std::size_t n, const char* what) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(f.gcount()) != n)
    throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
}

}  // namespace detail

inline void write_checkpoint(const std::string& path, const LatticeState& st, double dt,
                             const HiggsPotential& pot) {
  detail::check_lattice_shapes(st, "write_checkpoint");
  nlohmann::json header = {
      {"group", group_name(st.group)},
      {"representation", st.group == Group::u1 ? "charge1" : "adjoint"},
      {"n", st.geom.n},
      {"a", st.geom.a},
      {"t", st.t},
      {"dt", dt},
      {"potential", {{"mu", pot.mu}, {"v", pot.v}}},
  };
  const std::string htext = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_checkpoint: cannot open " + path);
  detail::write_bytes(f, detail::checkpoint_magic(), 8);
  const std::uint32_t version = 1;
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  detail::write_bytes(f, &version, 4);
  detail::write_bytes(f, &hlen, 4);
  detail::write_bytes(f, htext.data(), htext.size());
  for (const Vec* arr : {&st.A, &st.D, &st.phi, &st.pi, &st.A0})
    detail::write_bytes(f, arr->data(), arr->size() * sizeof(double));
  if (!f) throw std::runtime_error("write_checkpoint: write failed for " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_checkpoint: cannot open " + path);

  char magic[8];
  detail::read_bytes(f, magic, 8, "magic");
  if (std::memcmp(magic, detail::checkpoint_magic(), 8) != 0)
    throw std::runtime_error("read_checkpoint: bad magic in " + path);
  std::uint32_t version = 0, hlen = 0;
  detail::read_bytes(f, &version, 4, "version");
  if (version != 1)
    throw std::runtime_error("read_checkpoint: unsupported version " + std::to_string(version));
  detail::read_bytes(f, &hlen, 4, "header length");
  if (hlen == 0 || hlen > (1u << 20))
    throw std::runtime_error("read_checkpoint: implausible header length");
  std::string htext(hlen, '\0');
  detail::read_bytes(f, htext.data(), hlen, "header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("read_checkpoint: malformed header: ") + e.what());
  }

  const std::string gname = header.at("group").get<std::string>();
  Group group;
  if (gname == "u1")
    group = Group::u1;
  else if (gname == "su2")
    group = Group::su2;
  else
    throw std::runtime_error("read_checkpoint: unsupported group " + gname);
  const std::string rep = header.at("representation").get<std::string>();
  const std::string expected_rep = group == Group::u1 ? "charge1" : "adjoint";
  if (rep != expected_rep)
    throw std::runtime_error("read_checkpoint: representation " + rep + " does not match group " +
                             gname);

  LatticeGeometry geom;
  geom.n = header.at("n").get<int>();
  geom.a = header.at("a").get<double>();
  geom.validate();

  Checkpoint cp;
  cp.state = make_lattice_state(group, geom);
  cp.state.t = header.at("t").get<double>();
  cp.dt = header.at("dt").get<double>();
  cp.pot.mu = header.at("potential").at("mu").get<double>();
  cp.pot.v = header.at("potential").at("v").get<double>();

  for (Vec* arr : {&cp.state.A, &cp.state.D, &cp.state.phi, &cp.state.pi, &cp.state.A0})
    detail::read_bytes(f, arr->data(), arr->size() * sizeof(double), "field array");
  char extra;
  f.read(&extra, 1);
  if (f.gcount() != 0)
    throw std::runtime_error("read_checkpoint: trailing bytes after field arrays");
  return cp;
}

}  // namespace clebsch
