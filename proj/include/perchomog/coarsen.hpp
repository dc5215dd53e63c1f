#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "perchomog/environment.hpp"
#include "perchomog/fields.hpp"
#include "perchomog/lattice.hpp"
#include "perchomog/partition.hpp"

namespace perchomog {

// Anchor of a partition element: the vertex of its maximal crossing cluster
// closest to the cube center in l-infinity distance, ties broken by taking
// the lexicographically smallest vertex. Size-1 elements anchor at their
// unique vertex. nullopt when the element has no crossing cluster.
std::optional<Vertex> anchor_vertex(const Environment& env, const TriadicCube& element,
                                    bool* tie_broken = nullptr);

// Throwing variant; also validates that `element` is an element of P.
Vertex anchor(const Partition& P, const Environment& env, const TriadicCube& element);

// Eagerly computed anchors for every element of a partition.
struct AnchorMap {
  std::vector<std::optional<Vertex>> anchor;  // per element ordinal
  std::vector<uint8_t> tie_broken;
  int64_t missing = 0;  // elements with no crossing cluster (flagged)
};

AnchorMap compute_anchors(const Environment& env, const Partition& P);

// Lazy per-element anchor cache for one (environment, partition) pair.
class Coarsener {
 public:
  Coarsener(const Environment& env, const Partition& P);

  const Partition& partition() const { return *p_; }
  const Environment& environment() const { return *env_; }

  std::optional<Vertex> anchor_of(int32_t ordinal);
  std::optional<int64_t> anchor_index(int32_t ordinal);  // window index
  bool anchor_tie_broken(int32_t ordinal);               // valid after anchor_of

 private:
  void ensure(int32_t ordinal);

  const Environment* env_;
  const Partition* p_;
  std::vector<int8_t> state_;  // 0 unknown, 1 absent, 2 present
  std::vector<Vertex> anchor_;
  std::vector<uint8_t> tie_;
};

// Piecewise-constant lift of a cluster function: value at x is w at the
// anchor of the element containing x.
struct CoarseFunction {
  Window window;
  std::vector<int64_t> domain;  // cl_P(U), sorted window indices
  std::vector<double> value;
};

// w given on a sorted vertex set (typically the crossing cluster of U);
// throws when an element of the domain has no anchor or w is not defined at
// an anchor.
CoarseFunction coarsen(Coarsener& coarsener, const std::vector<int64_t>& cl,
                       const std::vector<int64_t>& w_vertices,
                       const std::vector<double>& w_values);

// Gradient of a coarse function on the edges of its domain.
EdgeField coarse_gradient(const CoarseFunction& f);

// Summation-by-parts weights of the linear functional u -> <q, grad [u]_P>
// over cl: the functional equals sum over used elements E of W_E * u(anchor
// of E) with W_E = 2 sum_{x in E} sum_{y ~ x, y in cl} q.(x-y). The weights
// sum to zero. Returned pairs are (element ordinal, weight), ordinal-sorted.
std::vector<std::pair<int32_t, double>> coarse_flux_weights(const Partition& P,
                                                            const std::vector<int64_t>& cl,
                                                            const Direction& q);

// Pointwise bound |w(x) - [w]_P(x)| <= sum over used elements within
// distance 1 of the element at x of the integral of |grad w 1_{a!=0}| over
// that element's cluster portion; checked at every x in the cluster.
struct PointwiseCoarsenReport {
  int64_t checked = 0;
  int64_t violations = 0;
  double max_gap = 0.0;  // max of lhs - rhs over all x (<= 0 when the bound holds)
  Vertex worst{0, 0, 0};
};

PointwiseCoarsenReport check_coarse_pointwise(Coarsener& coarsener,
                                              const std::vector<int64_t>& cl,
                                              const std::vector<int64_t>& cstar,
                                              const std::vector<double>& w);

// Interface bound: on every in-domain edge crossing two distinct elements,
// the coarse gradient is at most the sum of the two adjoining elements'
// integrals of |grad w 1_{a!=0}|.
struct InterfaceBoundReport {
  int64_t interface_edges = 0;
  int64_t violations = 0;
  double max_gap = 0.0;
};

InterfaceBoundReport check_interface_gradient(Coarsener& coarsener,
                                              const std::vector<int64_t>& cl,
                                              const std::vector<int64_t>& cstar,
                                              const std::vector<double>& w);

// Sobolev inequality on the cluster of a cube: the s-th power norm of the
// (mean-subtracted) function is controlled by the element-size-weighted
// s_* sums of the gradient, s_* = sd/(s+d). `ratio` compares lhs against
// rhs^(s/s_*); the caller asserts ratio <= calibrated constant.
struct SobolevReport {
  double s = 0.0;
  double s_star = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool degenerate = false;  // empty cluster or zero rhs with zero lhs
};

SobolevReport sobolev_check(Coarsener& coarsener, const TriadicCube& cube,
                            const std::vector<int64_t>& cstar, std::vector<double> w,
                            double s);

// Multiscale Poincare inequality for full-lattice functions on the window:
// || u - (u) || <= C ( 3^n ||grad u|| + sum_{k=n}^{m-1} 3^k (average over the
// 3^k-grid tiling of the squared normalized gradient averages)^(1/2) ).
// Returns both sides with C = 1; the caller compares ratio to a calibrated
// constant. Requires n in [m/2, m].
struct MsPoincareReport {
  int n = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

MsPoincareReport multiscale_poincare(const Window& window, const std::vector<double>& u,
                                     int n);

// Caccioppoli-type ratio for an a-harmonic function given on the cluster of
// the enlarged cube: lambda * 3^(2m) * gradient energy on the inner cluster
// over the centered L2 oscillation on the outer cluster (0 when the
// oscillation vanishes).
double caccioppoli_ratio(const Environment& env, int inner_level,
                         const std::vector<int64_t>& cstar_inner,
                         const std::vector<int64_t>& cstar_outer,
                         const std::vector<double>& u_outer);

}  // namespace perchomog
