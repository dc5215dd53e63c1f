#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "perchomog/environment.hpp"
#include "perchomog/lattice.hpp"

namespace perchomog {

using Direction = std::array<double, 3>;

inline Direction unit_direction(int axis) {
  Direction d{0.0, 0.0, 0.0};
  d[axis] = 1.0;
  return d;
}

// Antisymmetric edge field supported on the lattice edges with both endpoints
// in a fixed vertex set. Values are stored once per unordered edge in the
// canonical orientation base -> base + e_axis; F(head, tail) = -value is
// implied. Edges are ordered by (tail position, axis).
struct EdgeField {
  Window window;
  std::vector<int64_t> vertices;  // sorted window indices
  std::vector<int32_t> tail;      // per edge: position of base in `vertices`
  std::vector<int32_t> head;      // per edge: position of base + e_axis
  std::vector<int8_t> axis;
  std::vector<double> value;      // F(base, base + e_axis)

  int64_t edge_count() const { return static_cast<int64_t>(value.size()); }
  int64_t position_of(int64_t window_index) const;  // -1 when absent
};

// Skeleton with zero values; edges are all lattice edges inside the set, open
// or closed.
EdgeField make_edge_field(const Window& window, std::vector<int64_t> vertices);

// F(x, x+e) = u(x) - u(x+e) for u given per vertex position.
EdgeField gradient_field(const Window& window, std::vector<int64_t> vertices,
                         const std::vector<double>& u);

// F(x, x+e) = a(e) (u(x) - u(x+e)); zero on closed edges.
EdgeField flux_field(const Environment& env, std::vector<int64_t> vertices,
                     const std::vector<double>& u);

// F(x, y) = q . (x - y); on the stored orientation this is -q[axis].
EdgeField constant_field(const Window& window, std::vector<int64_t> vertices,
                         const Direction& q);

// Ordered-pair inner product: every unordered edge enters twice, so this is
// twice the sum of products over the stored edges. Fields must share support.
double inner(const EdgeField& F, const EdgeField& G);

// |F|(x) = sqrt(1/2 sum over in-set edges at x of F(e)^2).
double mag(const EdgeField& F, const Vertex& x);

// |F|^2 at every vertex position, one linear pass.
std::vector<double> mag_sq_all(const EdgeField& F);

// Per-vertex squared gradient magnitude of u over the open in-set edges:
// 1/2 sum of (u(x) - u(y))^2, the square of |grad u 1_{a != 0}|(x).
std::vector<double> grad_sq(const Environment& env, const std::vector<int64_t>& vertices,
                            const std::vector<double>& u);

// <grad u, a grad w> over edges within the set, ordered-pair convention.
double dirichlet_inner(const Environment& env, const std::vector<int64_t>& vertices,
                       const std::vector<double>& u, const std::vector<double>& w);

// <p, a grad w> over edges within the set, ordered-pair convention.
double flux_inner(const Environment& env, const std::vector<int64_t>& vertices,
                  const Direction& p, const std::vector<double>& w);

// <q, grad u> over edges within the set (no conductance), ordered-pair
// convention; u is a plain vertex function on the set.
double geometric_inner(const Window& window, const std::vector<int64_t>& vertices,
                       const Direction& q, const std::vector<double>& u);

}  // namespace perchomog
