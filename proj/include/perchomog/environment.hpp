#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "perchomog/lattice.hpp"

namespace perchomog {

enum class LawKind : uint8_t {
  kBernoulliUnit = 0,   // open value 1
  kTwoPoint = 1,        // open value uniform on {lambda, 1}
  kUniformInterval = 2, // open value uniform on [lambda, 1]
};

struct ConductanceLaw {
  LawKind kind = LawKind::kBernoulliUnit;
  double p = 1.0;       // open-edge probability, in (0, 1]
  double lambda = 1.0;  // ellipticity floor, in (0, 1]

  bool valid() const { return p > 0.0 && p <= 1.0 && lambda > 0.0 && lambda <= 1.0; }
};

std::string law_kind_name(LawKind k);
bool parse_law_kind(const std::string& s, LawKind* out);

// Per-edge conductance field on a window. values[axis][index(x)] is the
// conductance of {x, x+e_axis}; edges leaving the window hold NaN. A value of
// 0 is a closed edge; open values lie in [lambda, 1]. Storage is 32-bit, all
// arithmetic downstream is 64-bit.
struct Environment {
  Window window;
  ConductanceLaw law;
  uint64_t master_seed = 0;
  uint64_t env_index = 0;
  std::vector<std::vector<float>> values;

  double a(const Vertex& x, int axis) const {
    const double v = values[axis][window.index(x)];
    return v == v ? v : 0.0;  // NaN (outside) reads as closed
  }
  double a(const EdgeRef& e) const { return a(e.base, e.axis); }
  double a_edge(const EdgeRef& e) const { return a(e.base, e.axis); }
  bool open(const Vertex& x, int axis) const { return a(x, axis) > 0.0; }
};

Environment sample_environment(const ConductanceLaw& law, const Window& window,
                               uint64_t master_seed, uint64_t env_index);

// "PERC1" binary format. Layout: magic "PERC", version u8 = 1, d u8, L u32,
// lambda f64, p f64, law-kind u8, master_seed u64, env_index u64, then d
// arrays of L^d little-endian f32 in canonical vertex order.
void write_perc1(const Environment& env, std::ostream& os);
void write_perc1_file(const Environment& env, const std::string& path);
Environment read_perc1(std::istream& is);
Environment read_perc1_file(const std::string& path);

}  // namespace perchomog
