#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "perchomog/environment.hpp"
#include "perchomog/lattice.hpp"

namespace perchomog::testutil {

// Environment with hand-picked conductances: fill(x, axis) is consulted for
// every edge {x, x + e_axis} staying inside the window.
inline Environment make_env(int dim, int level,
                            const std::function<double(const Vertex&, int)>& fill,
                            double lambda = 1.0) {
  Environment env;
  env.window = Window{dim, level};
  env.law = ConductanceLaw{LawKind::kBernoulliUnit, 1.0, lambda};
  const int64_t n = env.window.vertex_count();
  const int64_t h = env.window.halfwidth();
  env.values.assign(size_t(dim), std::vector<float>(size_t(n), 0.0f));
  for (int64_t i = 0; i < n; ++i) {
    const Vertex x = env.window.vertex_at(i);
    for (int a = 0; a < dim; ++a) {
      if (x[a] + 1 > h) {
        env.values[a][i] = std::numeric_limits<float>::quiet_NaN();
      } else {
        env.values[a][i] = float(fill(x, a));
      }
    }
  }
  return env;
}

inline Environment full_lattice(int dim, int level) {
  return make_env(dim, level, [](const Vertex&, int) { return 1.0; });
}

// Deterministic pseudo-random vertex function, independent of the library's
// generator on purpose.
inline std::vector<double> ragged_values(size_t n, uint64_t seed) {
  std::vector<double> v(n);
  uint64_t s = seed * 2654435769u + 1;
  for (size_t i = 0; i < n; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v[i] = double(s % 20011) / 20011.0 - 0.5;
  }
  return v;
}

}  // namespace perchomog::testutil
