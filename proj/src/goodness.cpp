#include "perchomog/goodness.hpp"

#include <algorithm>
#include <stdexcept>

namespace perchomog {
namespace {

// Offsets along one axis for test cubes of side s inside [lo, hi]. Strided
// offsets step by ceil(s/2) and always include the flush-right position.
std::vector<int64_t> axis_offsets(int64_t lo, int64_t hi, int64_t s, TestMode mode) {
  std::vector<int64_t> out;
  int64_t last = hi - s + 1;
  if (last < lo) return out;
  if (mode == TestMode::kExact) {
    for (int64_t o = lo; o <= last; ++o) out.push_back(o);
    return out;
  }
  int64_t stride = (s + 1) / 2;
  for (int64_t o = lo; o <= last; o += stride) out.push_back(o);
  if (out.back() != last) out.push_back(last);
  return out;
}

// Enumerate the test-cube boxes of one side length that meet the central
// region, invoking fn(box) for each; fn returns false to stop early.
template <typename Fn>
bool for_each_test_cube(const Box& outer, const Box& central, int64_t s, TestMode mode,
                        Fn&& fn) {
  std::array<std::vector<int64_t>, 3> offs;
  for (int i = 0; i < outer.dim; ++i) {
    offs[i] = axis_offsets(outer.lo[i], outer.hi[i], s, mode);
    if (offs[i].empty()) return true;
  }
  std::array<size_t, 3> idx{0, 0, 0};
  while (true) {
    Box b;
    b.dim = outer.dim;
    bool meets_central = true;
    for (int i = 0; i < outer.dim; ++i) {
      b.lo[i] = offs[i][idx[i]];
      b.hi[i] = b.lo[i] + s - 1;
      if (b.hi[i] < central.lo[i] || b.lo[i] > central.hi[i]) meets_central = false;
    }
    if (meets_central && !fn(b)) return false;
    int i = outer.dim - 1;
    while (i >= 0 && ++idx[i] == offs[i].size()) idx[i--] = 0;
    if (i < 0) return true;
  }
}

}  // namespace

const char* test_mode_name(TestMode m) {
  return m == TestMode::kExact ? "exact" : "strided";
}

TestMode parse_test_mode(const std::string& s) {
  if (s == "exact") return TestMode::kExact;
  if (s == "strided") return TestMode::kStrided;
  throw std::invalid_argument("unknown test mode: " + s);
}

TestMode default_test_mode(int64_t size) {
  return size <= 27 ? TestMode::kExact : TestMode::kStrided;
}

Box three_quarters_box(const TriadicCube& cube) {
  Box b;
  b.dim = cube.dim;
  int64_t r = (3 * cube.size()) / 8;  // side 2r+1 >= (3/4) * size
  for (int i = 0; i < cube.dim; ++i) {
    b.lo[i] = cube.center[i] - r;
    b.hi[i] = cube.center[i] + r;
  }
  return b;
}

std::vector<int64_t> test_cube_sides(int64_t size, TestMode mode) {
  std::vector<int64_t> out;
  int64_t s_min = (size + 9) / 10;
  int64_t s_max = size / 2;
  if (size < 3 || s_max < s_min) return out;
  if (mode == TestMode::kExact) {
    if (size > 27) throw std::invalid_argument("exact test-cube family capped at size 27");
    for (int64_t s = s_min; s <= s_max; ++s) out.push_back(s);
  } else {
    for (int64_t s = s_min; s <= s_max; s *= 2) out.push_back(s);
  }
  return out;
}

GoodnessVerdict is_well_connected(const Environment& env, const TriadicCube& cube,
                                  TestMode mode) {
  if (cube.size() < 3) throw std::invalid_argument("is_well_connected requires size >= 3");
  GoodnessVerdict v;
  v.cube = cube;
  v.mode = mode;

  Box outer = Box::of_cube(cube);
  ClusterLabeling outer_lab = label_clusters(env, outer);
  auto cross_ord = crossing_component(outer_lab);
  if (!cross_ord) {
    v.note = "no crossing cluster";
    return v;
  }
  // Bitmap of the crossing cluster over the cube, for fast membership below.
  std::vector<uint8_t> in_C(outer.vertex_count(), 0);
  for (int64_t i = 0; i < outer.vertex_count(); ++i) {
    in_C[i] = outer_lab.component[i] == *cross_ord;
  }

  Box central = three_quarters_box(cube);
  int64_t size = cube.size();
  bool ok = true;
  for (int64_t s : test_cube_sides(size, mode)) {
    bool keep_going = for_each_test_cube(outer, central, s, mode, [&](const Box& tb) {
      ClusterLabeling lab = label_clusters(env, tb);
      // Condition (i): the test cube itself is crossable.
      for (int a = 0; a < tb.dim; ++a) {
        bool crossed = false;
        for (size_t ord = 0; ord < lab.size.size() && !crossed; ++ord) {
          crossed = lab.bb_lo[ord][a] == tb.lo[a] && lab.bb_hi[ord][a] == tb.hi[a];
        }
        if (!crossed) {
          v.witness_box = tb;
          v.note = "test cube not crossable";
          ok = false;
          return false;
        }
      }
      // Condition (ii): large components inside the test cube must meet the
      // crossing cluster of the outer cube. Diameter threshold is size/10.
      int32_t n_ord = static_cast<int32_t>(lab.size.size());
      std::vector<uint8_t> large(n_ord, 0), meets(n_ord, 0);
      bool any_large = false;
      for (int32_t ord = 0; ord < n_ord; ++ord) {
        if (10 * lab.diameter(ord) >= size) {
          large[ord] = 1;
          any_large = true;
        }
      }
      if (any_large) {
        int64_t n = tb.vertex_count();
        for (int64_t i = 0; i < n; ++i) {
          int32_t ord = lab.component[i];
          if (!large[ord] || meets[ord]) continue;
          if (in_C[outer.local_index(tb.vertex_at(i))]) meets[ord] = 1;
        }
        for (int32_t ord = 0; ord < n_ord; ++ord) {
          if (large[ord] && !meets[ord]) {
            v.witness_box = tb;
            v.witness_vertex = tb.vertex_at(lab.canonical[ord]);
            v.note = "large component detached from crossing cluster";
            ok = false;
            return false;
          }
        }
      }
      return true;
    });
    if (!keep_going) break;
  }
  v.well_connected = ok;
  return v;
}

GoodnessVerdict is_good_cube(const Environment& env, const TriadicCube& cube,
                             TestMode mode) {
  GoodnessVerdict v;
  v.cube = cube;
  v.mode = mode;
  if (cube.size() < 3) {
    v.well_connected = true;  // size-1 cubes are trivially well-connected
    v.note = "size below 3";
    return v;
  }
  v = is_well_connected(env, cube, mode);
  if (!v.well_connected) return v;
  for (const TriadicCube& succ : successors(cube)) {
    if (succ.size() < 3) continue;
    GoodnessVerdict sv = is_well_connected(env, succ, mode);
    if (!sv.well_connected) {
      v.witness_box = Box::of_cube(succ);
      v.note = "successor not well-connected";
      return v;
    }
  }
  v.good = true;
  return v;
}

GoodnessVerdict is_good_cube(const Environment& env, const TriadicCube& cube) {
  GoodnessVerdict v;
  v.cube = cube;
  v.mode = default_test_mode(cube.size());
  if (cube.size() < 3) {
    v.well_connected = true;
    v.note = "size below 3";
    return v;
  }
  v = is_well_connected(env, cube, default_test_mode(cube.size()));
  if (!v.well_connected) return v;
  for (const TriadicCube& succ : successors(cube)) {
    if (succ.size() < 3) continue;
    GoodnessVerdict sv = is_well_connected(env, succ, default_test_mode(succ.size()));
    if (!sv.well_connected) {
      v.witness_box = Box::of_cube(succ);
      v.note = "successor not well-connected";
      return v;
    }
  }
  v.good = true;
  return v;
}

std::vector<int64_t> cluster_C_star(const Environment& env, const TriadicCube& cube) {
  GoodnessVerdict v = is_good_cube(env, cube);
  if (!v.good) return {};
  return crossing_cluster_vertices(env, cube);
}

GoodnessOracle::GoodnessOracle(const Environment& env, std::optional<TestMode> forced_mode)
    : env_(&env), forced_mode_(forced_mode) {}

TestMode GoodnessOracle::mode_for(int64_t size) const {
  return forced_mode_ ? *forced_mode_ : default_test_mode(size);
}

bool GoodnessOracle::well_connected(const TriadicCube& cube) {
  if (cube.size() < 3) return true;
  auto it = wc_cache_.find(cube);
  if (it != wc_cache_.end()) return it->second;
  bool ok = is_well_connected(*env_, cube, mode_for(cube.size())).well_connected;
  wc_cache_.emplace(cube, ok);
  return ok;
}

bool GoodnessOracle::good(const TriadicCube& cube) {
  if (cube.size() < 3) return false;
  auto it = good_cache_.find(cube);
  if (it != good_cache_.end()) return it->second;
  bool ok = well_connected(cube);
  if (ok) {
    for (const TriadicCube& succ : successors(cube)) {
      if (!well_connected(succ)) {
        ok = false;
        break;
      }
    }
  }
  good_cache_.emplace(cube, ok);
  return ok;
}

}  // namespace perchomog
