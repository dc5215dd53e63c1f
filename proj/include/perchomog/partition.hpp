#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perchomog/environment.hpp"
#include "perchomog/goodness.hpp"
#include "perchomog/lattice.hpp"
#include "perchomog/stats.hpp"

namespace perchomog {

// A cube predicate together with its declared locality: the verdict for a
// level-n cube depends only on edges inside the concentric level-(n +
// radius_levels) cube. Cubes whose declared region leaves the window are
// treated as good by default during localized construction.
struct CubeOracle {
  std::function<bool(const TriadicCube&)> predicate;
  int radius_levels = 1;
  std::string tag = "custom";
};

// Partition of the window into triadic cubes via the stopping-time
// construction: shrink the good family G to Gbar = {cube in G_loc : every
// chain-reachable cube stays in G_loc}, then assign to each vertex the
// largest Gbar-cube containing it that has a successor outside Gbar.
struct Partition {
  Window window;
  std::string oracle_tag;               // "P", "Q", or "custom"
  std::optional<TestMode> mode;         // goodness test family, when relevant
  bool localized = true;
  std::vector<TriadicCube> elements;    // disjoint cover of the window
  std::vector<int32_t> element_of;      // per window linear index: ordinal

  const TriadicCube& element_at(const Vertex& x) const;
  const TriadicCube& element_at(int64_t window_index) const {
    return elements[element_of[window_index]];
  }
  int64_t size_at(int64_t window_index) const { return element_at(window_index).size(); }
};

// Chain closure: all cubes reachable from `cube` where step m moves to a cube
// of 3x the size whose predecessor touches (dist <= 1) or contains the
// current one; truncated once sizes exceed the window side. Contains `cube`.
std::vector<TriadicCube> k_closure(const TriadicCube& cube, const Window& window);

Partition build_partition_local(const CubeOracle& oracle, const Window& window);

// Same construction hard-rooted at an arbitrary triadic cube instead of the
// whole window: the rim default and the chain cap are taken relative to the
// root, the cover spans exactly the root's vertices, and element_of stays -1
// outside it. The verdict reads no edge outside the root whenever the oracle
// honors its declared radius.
Partition build_partition_local(const CubeOracle& oracle, const Window& window,
                                const TriadicCube& root);

// Partition into well-connected cubes (the good-cube oracle).
Partition partition_P(const Environment& env,
                      std::optional<TestMode> forced_mode = std::nullopt);

// Exponent and threshold of the coarseness oracle used by partition_Q:
// a cube is kept when lambda_{t0}(cube, P) <= kQTau, the full-lattice value
// 3^{t0} with a safety factor of 4.
inline double q_oracle_exponent(int dim) { return 2.0 * dim * (dim + 2); }
double q_oracle_threshold(int dim);

// Coarser partition whose elements have uniformly controlled P-coarseness;
// used wherever gradient-integrability improvements are needed.
Partition partition_Q(const Environment& env, const Partition& P);

// Union of partition elements over the vertices of U (window indices).
std::vector<int64_t> cl_closure(const Partition& S, const std::vector<int64_t>& U);
std::vector<int64_t> cl_closure(const Partition& S, const TriadicCube& U);

// Coarseness functional: |U|^{-1} sum over x in cl_S(U) of size(element(x))^t.
double lambda_t(const Partition& S, const std::vector<int64_t>& U, double t);
double lambda_t(const Partition& S, const TriadicCube& U, double t);

struct CoarsenessStats {
  double t = 0.0;
  double threshold = 0.0;
  std::vector<double> m_hat;        // per environment: empirical minimal scale
  TailFit tail;                     // stretched-exponential tail diagnostic
};

// Per environment: the largest centered triadic scale 3^k whose lambda_t
// exceeds the threshold (1 when none does).
CoarsenessStats minimal_scale(const std::vector<const Partition*>& ensemble, double t,
                              double threshold);

// Crossing cluster of a union of partition elements: the maximal cluster of
// cl_P(U) containing every per-element crossing cluster. Empty when any
// element of size >= 3 fails to be good; singleton elements contribute
// themselves when open-connected to the rest.
std::vector<int64_t> cluster_C_star_union(const Environment& env, const Partition& P,
                                          const std::vector<int64_t>& U);

struct RegularityRatioEstimate {
  TriadicCube cube;
  std::string kind;       // "RH" or "ME"
  double exponent = 0.0;  // s for RH, epsilon for ME
  double estimate = 0.0;  // running max over sampled trials: a lower bound
  int trials = 0;
  bool no_cluster = false;
};

// Monte Carlo lower bound for the worst-case ratio of gradient norms over
// harmonic functions on the maximal cluster of the tripled cube. kind "RH"
// compares the L2 average on the inner cluster against the L^{2d/(d+1)}-type
// average on the tripled cube; "ME" compares L^{2+eps} against L2.
RegularityRatioEstimate estimate_regularity_ratio(const Environment& env,
                                                  const TriadicCube& cube,
                                                  const std::string& kind,
                                                  double exponent, int trials);

}  // namespace perchomog
