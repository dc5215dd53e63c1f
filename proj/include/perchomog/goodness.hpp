#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perchomog/cluster.hpp"
#include "perchomog/environment.hpp"
#include "perchomog/lattice.hpp"

namespace perchomog {

// Family of test cubes probed by the well-connectedness predicate.
// Exact enumerates every integer side in [ceil(s/10), floor(s/2)] at every
// offset (cost O(s^{2d+1}), capped at size 27). Strided keeps the geometric
// side set {ceil(s/10) * 2^j} and offsets on a stride of half the side, so
// large cubes stay tractable; verdicts record which family was used.
enum class TestMode : uint8_t { kExact = 0, kStrided = 1 };

const char* test_mode_name(TestMode m);
TestMode parse_test_mode(const std::string& s);

// Automatic policy: exact up to size 27, strided beyond.
TestMode default_test_mode(int64_t size);

struct GoodnessVerdict {
  TriadicCube cube;
  bool well_connected = false;
  bool good = false;
  TestMode mode = TestMode::kExact;
  std::optional<Box> witness_box;      // failing test cube, if any
  std::optional<Vertex> witness_vertex;  // canonical vertex of offending component
  std::string note;
};

// Concentric box of side ~3/4 of the cube's (rounded up to odd).
Box three_quarters_box(const TriadicCube& cube);

// Test-cube sides for a given size: every integer in [ceil(s/10), floor(s/2)]
// (exact) or the geometric subset (strided). Size < 3 gives an empty family.
std::vector<int64_t> test_cube_sides(int64_t size, TestMode mode);

// Definition: a crossing cluster C of the cube exists; every test cube
// meeting the central 3/4 box is crossable; and every open component of a
// test cube with Chebyshev diameter >= size/10 meets C inside that test cube.
// Requires size >= 3.
GoodnessVerdict is_well_connected(const Environment& env, const TriadicCube& cube,
                                  TestMode mode);

// good iff size >= 3, the cube is well-connected, and all 3^d successors are
// well-connected (cubes of size 1 count as trivially well-connected).
GoodnessVerdict is_good_cube(const Environment& env, const TriadicCube& cube,
                             TestMode mode);
GoodnessVerdict is_good_cube(const Environment& env, const TriadicCube& cube);

// Maximal crossing cluster of a good cube as window indices; empty when the
// cube is not good.
std::vector<int64_t> cluster_C_star(const Environment& env, const TriadicCube& cube);

// Memoizing wrapper used by the partition builder: well-connected verdicts
// are shared between a cube's own goodness check and its predecessor's
// successor checks. One instance per (environment, mode); not thread-safe.
class GoodnessOracle {
 public:
  GoodnessOracle(const Environment& env, std::optional<TestMode> forced_mode = std::nullopt);

  bool well_connected(const TriadicCube& cube);  // size < 3: trivially true
  bool good(const TriadicCube& cube);
  TestMode mode_for(int64_t size) const;
  const Environment& env() const { return *env_; }

 private:
  const Environment* env_;
  std::optional<TestMode> forced_mode_;
  std::map<TriadicCube, bool> wc_cache_;
  std::map<TriadicCube, bool> good_cache_;
};

}  // namespace perchomog
