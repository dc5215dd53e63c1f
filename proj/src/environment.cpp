#include "perchomog/environment.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "perchomog/rng.hpp"

namespace perchomog {

std::string law_kind_name(LawKind k) {
  switch (k) {
    case LawKind::kBernoulliUnit: return "bernoulli_unit";
    case LawKind::kTwoPoint: return "two_point";
    case LawKind::kUniformInterval: return "uniform_interval";
  }
  return "?";
}

bool parse_law_kind(const std::string& s, LawKind* out) {
  if (s == "bernoulli_unit") { *out = LawKind::kBernoulliUnit; return true; }
  if (s == "two_point") { *out = LawKind::kTwoPoint; return true; }
  if (s == "uniform_interval") { *out = LawKind::kUniformInterval; return true; }
  return false;
}

Environment sample_environment(const ConductanceLaw& law, const Window& window,
                               uint64_t master_seed, uint64_t env_index) {
  if (!law.valid()) throw std::invalid_argument("sample_environment: invalid law");
  Environment env;
  env.window = window;
  env.law = law;
  env.master_seed = master_seed;
  env.env_index = env_index;
  const int64_t n = window.vertex_count();
  const float nan = std::numeric_limits<float>::quiet_NaN();
  env.values.assign(window.dim, std::vector<float>(static_cast<size_t>(n), nan));
  for (int axis = 0; axis < window.dim; ++axis) {
    for (int64_t idx = 0; idx < n; ++idx) {
      EdgeRef e{window.vertex_at(idx), axis};
      if (!window.contains(e.other())) continue;
      const uint64_t eid = static_cast<uint64_t>(edge_index(window, e));
      const double u_open =
          rng_uniform(master_seed, env_index, RngStream::kEdgeOpen, eid);
      float v = 0.0f;
      if (u_open < law.p) {
        switch (law.kind) {
          case LawKind::kBernoulliUnit:
            v = 1.0f;
            break;
          case LawKind::kTwoPoint: {
            const double u =
                rng_uniform(master_seed, env_index, RngStream::kEdgeValue, eid);
            v = static_cast<float>(u < 0.5 ? law.lambda : 1.0);
            break;
          }
          case LawKind::kUniformInterval: {
            const double u =
                rng_uniform(master_seed, env_index, RngStream::kEdgeValue, eid);
            v = static_cast<float>(law.lambda + (1.0 - law.lambda) * u);
            break;
          }
        }
      }
      env.values[axis][static_cast<size_t>(idx)] = v;
    }
  }
  return env;
}

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  // Little-endian hosts only (asserted at build time below).
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("PERC1: truncated stream");
  return v;
}

static_assert(std::endian::native == std::endian::little,
              "PERC1 serialization assumes a little-endian host");

}  // namespace

void write_perc1(const Environment& env, std::ostream& os) {
  os.write("PERC", 4);
  put<uint8_t>(os, 1);
  put<uint8_t>(os, static_cast<uint8_t>(env.window.dim));
  put<uint32_t>(os, static_cast<uint32_t>(env.window.side()));
  put<double>(os, env.law.lambda);
  put<double>(os, env.law.p);
  put<uint8_t>(os, static_cast<uint8_t>(env.law.kind));
  put<uint64_t>(os, env.master_seed);
  put<uint64_t>(os, env.env_index);
  for (int axis = 0; axis < env.window.dim; ++axis) {
    const auto& arr = env.values[axis];
    os.write(reinterpret_cast<const char*>(arr.data()),
             static_cast<std::streamsize>(arr.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("PERC1: write failed");
}

void write_perc1_file(const Environment& env, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("PERC1: cannot open " + path);
  write_perc1(env, os);
}

Environment read_perc1(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "PERC", 4) != 0)
    throw std::runtime_error("PERC1: bad magic");
  const uint8_t version = get<uint8_t>(is);
  if (version != 1) throw std::runtime_error("PERC1: unsupported version");
  Environment env;
  env.window.dim = get<uint8_t>(is);
  const uint32_t L = get<uint32_t>(is);
  env.law.lambda = get<double>(is);
  env.law.p = get<double>(is);
  env.law.kind = static_cast<LawKind>(get<uint8_t>(is));
  env.master_seed = get<uint64_t>(is);
  env.env_index = get<uint64_t>(is);
  if (env.window.dim < 2 || env.window.dim > kMaxDim)
    throw std::runtime_error("PERC1: bad dimension");
  int level = -1;
  for (int m = 0; m <= kMaxLevel; ++m)
    if (pow3(m) == L) level = m;
  if (level < 0) throw std::runtime_error("PERC1: side is not a power of 3");
  env.window.level = level;
  const int64_t n = env.window.vertex_count();
  env.values.assign(env.window.dim, std::vector<float>(static_cast<size_t>(n)));
  for (int axis = 0; axis < env.window.dim; ++axis) {
    is.read(reinterpret_cast<char*>(env.values[axis].data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!is) throw std::runtime_error("PERC1: truncated edge array");
  }
  for (int axis = 0; axis < env.window.dim; ++axis) {
    for (int64_t idx = 0; idx < n; ++idx) {
      const float v = env.values[axis][static_cast<size_t>(idx)];
      if (v != v) continue;
      if (v != 0.0f && (v < env.law.lambda - 1e-6 || v > 1.0f + 1e-6f))
        throw std::runtime_error("PERC1: conductance outside {0} U [lambda,1]");
    }
  }
  return env;
}

Environment read_perc1_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("PERC1: cannot open " + path);
  return read_perc1(is);
}

}  // namespace perchomog
