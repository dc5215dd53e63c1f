#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace perchomog {

// Coordinates are stored in a fixed-size array; entries at positions >= dim
// are always zero so that lexicographic comparison is well defined.
using Vertex = std::array<int32_t, 3>;

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxLevel = 12;

int64_t pow3(int level);

// Axis-aligned cube of side 3^level whose center lies on the 3^level grid.
// Vertex set: { x : |x_i - center_i| <= (3^level - 1)/2 }, exactly 3^(d*level)
// points. Two triadic cubes are always nested or disjoint.
struct TriadicCube {
  int dim = 2;
  int level = 0;
  Vertex center{0, 0, 0};

  int64_t size() const { return pow3(level); }
  int64_t halfwidth() const { return (pow3(level) - 1) / 2; }
  int64_t vertex_count() const;
  bool contains(const Vertex& x) const;
  bool contains(const TriadicCube& other) const;
  // Chebyshev distance between vertex sets (0 if they intersect).
  int64_t dist(const TriadicCube& other) const;

  bool operator==(const TriadicCube& o) const {
    return dim == o.dim && level == o.level && center == o.center;
  }
  bool operator<(const TriadicCube& o) const {
    if (level != o.level) return level < o.level;
    return center < o.center;
  }
};

// Origin-centered observation box of side 3^level; every triadic cube of
// level <= this level that meets it is either inside or outside it only
// partially at the rim, and the canonical linear vertex index below fixes
// the serialization order of everything downstream.
struct Window {
  int dim = 2;
  int level = 4;

  int64_t side() const { return pow3(level); }
  int64_t halfwidth() const { return (side() - 1) / 2; }
  int64_t vertex_count() const;
  bool contains(const Vertex& x) const;
  bool contains(const TriadicCube& c) const;
  TriadicCube as_cube() const { return TriadicCube{dim, level, {0, 0, 0}}; }

  // index(x) = sum_i (x_i + floor(L/2)) * L^(d-i), i = 1..d.
  int64_t index(const Vertex& x) const;
  Vertex vertex_at(int64_t index) const;
};

// Canonical orientation of an unordered lattice edge: {base, base + e_axis}.
struct EdgeRef {
  Vertex base{0, 0, 0};
  int axis = 0;

  Vertex other() const {
    Vertex y = base;
    y[axis] += 1;
    return y;
  }
};

// Unique level-n triadic cube containing x.
TriadicCube cube_of(const Vertex& x, int level, int dim);

// Level-(n+1) triadic cube containing c.
TriadicCube predecessor(const TriadicCube& c);

// The 3^d level-(n-1) cubes that partition c. Throws for level 0.
std::vector<TriadicCube> successors(const TriadicCube& c);

// Concentric triadic-size enlargement: same center, level + k. This is the
// data region that determines a cube's goodness verdict.
TriadicCube enlarged(const TriadicCube& c, int k = 1);

// All vertices of a cube, in canonical (window-index compatible) order.
std::vector<Vertex> cube_vertices(const TriadicCube& c);

// Canonical edge id inside a window: axis * L^d + index(base).
int64_t edge_index(const Window& w, const EdgeRef& e);
int64_t edge_count(const Window& w);

// Enumerate every unordered edge with both endpoints in the window, each
// exactly once, ordered by edge_index.
std::vector<EdgeRef> enumerate_edges(const Window& w);

// A finite region is a set of vertices; predicates below use the full
// lattice adjacency. int(U) = {x in U : every lattice neighbor of x is in U}.
struct Region {
  std::vector<Vertex> vertices;
};

std::vector<Vertex> interior_vertices(const Region& r, int dim);
std::vector<Vertex> boundary_vertices(const Region& r, int dim);

Region region_of_cube(const TriadicCube& c);

// Sorted window indices of a cube's vertices; the cube must lie in the window.
std::vector<int64_t> cube_window_indices(const Window& w, const TriadicCube& c);

}  // namespace perchomog
