#include "perchomog/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "perchomog/cluster.hpp"
#include "perchomog/rng.hpp"
#include "perchomog/solver.hpp"

namespace perchomog {
namespace {

int64_t floordiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

int64_t ceildiv(int64_t a, int64_t b) { return -floordiv(-a, b); }

// Predecessor-level cubes touching (dist <= 1) or containing `b`; these are
// the stepping stones of the chain-growth rule.
std::vector<TriadicCube> touching_preds(const TriadicCube& b, int plevel) {
  int64_t pg = pow3(plevel);
  int64_t ph = (pg - 1) / 2;
  int64_t bh = b.halfwidth();
  int64_t reach = ph + bh + 1;
  std::array<std::vector<int64_t>, 3> cs;
  for (int i = 0; i < b.dim; ++i) {
    int64_t lo = ceildiv(b.center[i] - reach, pg);
    int64_t hi = floordiv(b.center[i] + reach, pg);
    for (int64_t k = lo; k <= hi; ++k) cs[i].push_back(k * pg);
  }
  std::vector<TriadicCube> out;
  std::array<size_t, 3> idx{0, 0, 0};
  if (cs[0].empty()) return out;
  while (true) {
    TriadicCube p;
    p.dim = b.dim;
    p.level = plevel;
    for (int i = 0; i < b.dim; ++i) p.center[i] = static_cast<int32_t>(cs[i][idx[i]]);
    out.push_back(p);
    int i = b.dim - 1;
    while (i >= 0 && ++idx[i] == cs[i].size()) idx[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

template <typename Visit>
void chain_bfs(const TriadicCube& start, int64_t size_cap, Visit&& visit) {
  std::set<TriadicCube> seen{start};
  std::vector<TriadicCube> frontier{start};
  if (!visit(start)) return;
  while (!frontier.empty()) {
    std::vector<TriadicCube> next;
    for (const TriadicCube& b : frontier) {
      if (3 * b.size() > size_cap) continue;
      for (const TriadicCube& p : touching_preds(b, b.level + 2)) {
        for (const TriadicCube& s : successors(p)) {
          if (!seen.insert(s).second) continue;
          if (!visit(s)) return;
          next.push_back(s);
        }
      }
    }
    frontier = std::move(next);
  }
}

}  // namespace

const TriadicCube& Partition::element_at(const Vertex& x) const {
  return elements[element_of[window.index(x)]];
}

std::vector<TriadicCube> k_closure(const TriadicCube& cube, const Window& window) {
  std::vector<TriadicCube> out;
  chain_bfs(cube, window.side(), [&](const TriadicCube& c) {
    out.push_back(c);
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

Partition build_partition_local(const CubeOracle& oracle, const Window& window) {
  return build_partition_local(oracle, window, window.as_cube());
}

Partition build_partition_local(const CubeOracle& oracle, const Window& window,
                                const TriadicCube& root) {
  if (root.level < 1) throw std::invalid_argument("root level must be >= 1");
  if (!window.contains(root)) throw std::invalid_argument("root must lie in the window");
  if (oracle.radius_levels < 1 || oracle.radius_levels > root.level) {
    throw std::invalid_argument("oracle radius exceeds root");
  }
  const int64_t L = root.size();

  std::map<TriadicCube, bool> gloc, gbar;
  auto in_gloc = [&](const TriadicCube& c) -> bool {
    auto it = gloc.find(c);
    if (it != gloc.end()) return it->second;
    bool v = !root.contains(enlarged(c, oracle.radius_levels)) || oracle.predicate(c);
    gloc.emplace(c, v);
    return v;
  };
  auto in_gbar = [&](const TriadicCube& c) -> bool {
    auto it = gbar.find(c);
    if (it != gbar.end()) return it->second;
    bool v = true;
    chain_bfs(c, L, [&](const TriadicCube& member) {
      if (!in_gloc(member)) {
        v = false;
        return false;
      }
      return true;
    });
    gbar.emplace(c, v);
    return v;
  };

  Partition S;
  S.window = window;
  S.oracle_tag = oracle.tag;
  S.localized = true;
  S.element_of.assign(window.vertex_count(), -1);

  auto emit = [&](const TriadicCube& c) {
    int32_t ord = static_cast<int32_t>(S.elements.size());
    S.elements.push_back(c);
    Box b = Box::of_cube(c);
    int64_t n = b.vertex_count();
    for (int64_t i = 0; i < n; ++i) S.element_of[window.index(b.vertex_at(i))] = ord;
  };

  // Top-down: emit a cube when some successor leaves Gbar; recurse otherwise.
  // The root is always in Gbar (its chain closure passes by default), and
  // recursion only enters Gbar members, so every vertex gets covered.
  std::function<void(const TriadicCube&)> descend = [&](const TriadicCube& c) {
    if (c.level == 0) {
      emit(c);
      return;
    }
    std::vector<TriadicCube> succ = successors(c);
    for (const TriadicCube& s : succ) {
      if (!in_gbar(s)) {
        emit(c);
        return;
      }
    }
    for (const TriadicCube& s : succ) descend(s);
  };
  if (!in_gbar(root)) throw std::logic_error("root cube left the default-good family");
  descend(root);
  return S;
}

Partition partition_P(const Environment& env, std::optional<TestMode> forced_mode) {
  auto good = std::make_shared<GoodnessOracle>(env, forced_mode);
  CubeOracle oracle;
  oracle.tag = "P";
  oracle.radius_levels = 1;
  oracle.predicate = [good](const TriadicCube& c) { return good->good(c); };
  Partition S = build_partition_local(oracle, env.window);
  S.mode = forced_mode;
  return S;
}

double q_oracle_threshold(int dim) {
  return 4.0 * std::pow(3.0, q_oracle_exponent(dim));
}

Partition partition_Q(const Environment& env, const Partition& P) {
  const double t0 = q_oracle_exponent(env.window.dim);
  const double tau = q_oracle_threshold(env.window.dim);
  CubeOracle oracle;
  oracle.tag = "Q";
  oracle.radius_levels = 1;
  oracle.predicate = [&](const TriadicCube& c) { return lambda_t(P, c, t0) <= tau; };
  Partition S = build_partition_local(oracle, env.window);
  S.mode = P.mode;
  return S;
}

std::vector<int64_t> cl_closure(const Partition& S, const std::vector<int64_t>& U) {
  std::vector<uint8_t> used(S.elements.size(), 0);
  for (int64_t w : U) used[S.element_of[w]] = 1;
  std::vector<int64_t> out;
  for (size_t ord = 0; ord < S.elements.size(); ++ord) {
    if (!used[ord]) continue;
    Box b = Box::of_cube(S.elements[ord]);
    int64_t n = b.vertex_count();
    for (int64_t i = 0; i < n; ++i) out.push_back(S.window.index(b.vertex_at(i)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int64_t> cl_closure(const Partition& S, const TriadicCube& U) {
  return cl_closure(S, cube_window_indices(S.window, U));
}

double lambda_t(const Partition& S, const std::vector<int64_t>& U, double t) {
  if (U.empty()) throw std::invalid_argument("lambda_t of empty set");
  std::vector<uint8_t> used(S.elements.size(), 0);
  for (int64_t w : U) used[S.element_of[w]] = 1;
  double sum = 0.0;
  for (size_t ord = 0; ord < S.elements.size(); ++ord) {
    if (!used[ord]) continue;
    const TriadicCube& e = S.elements[ord];
    sum += static_cast<double>(e.vertex_count()) *
           std::pow(static_cast<double>(e.size()), t);
  }
  return sum / static_cast<double>(U.size());
}

double lambda_t(const Partition& S, const TriadicCube& U, double t) {
  return lambda_t(S, cube_window_indices(S.window, U), t);
}

CoarsenessStats minimal_scale(const std::vector<const Partition*>& ensemble, double t,
                              double threshold) {
  if (ensemble.empty()) throw std::invalid_argument("minimal_scale: empty ensemble");
  CoarsenessStats st;
  st.t = t;
  st.threshold = threshold;
  for (const Partition* S : ensemble) {
    double mh = 1.0;
    for (int k = S->window.level; k >= 0; --k) {
      TriadicCube c;
      c.dim = S->window.dim;
      c.level = k;
      c.center = {0, 0, 0};
      if (lambda_t(*S, c, t) > threshold) {
        mh = static_cast<double>(pow3(k));
        break;
      }
    }
    st.m_hat.push_back(mh);
  }
  st.tail = fit_stretched_tail(st.m_hat);
  return st;
}

std::vector<int64_t> cluster_C_star_union(const Environment& env, const Partition& P,
                                          const std::vector<int64_t>& U) {
  std::vector<int64_t> cl = cl_closure(P, U);
  ClusterLabeling lab = label_clusters_subset(env, cl);
  if (lab.size.empty()) return {};

  // Markers: canonical vertices of the per-element crossing clusters.
  std::vector<uint8_t> used(P.elements.size(), 0);
  for (int64_t w : U) used[P.element_of[w]] = 1;
  std::vector<int64_t> markers;
  for (size_t ord = 0; ord < P.elements.size(); ++ord) {
    if (!used[ord]) continue;
    std::vector<int64_t> cc = crossing_cluster_vertices(env, P.elements[ord]);
    if (!cc.empty()) markers.push_back(cc.front());
  }

  auto position = [&](int64_t widx) -> int64_t {
    auto it = std::lower_bound(cl.begin(), cl.end(), widx);
    return (it != cl.end() && *it == widx) ? it - cl.begin() : -1;
  };

  int32_t best = lab.largest;
  if (!markers.empty()) {
    std::vector<int64_t> marks(lab.size.size(), 0);
    for (int64_t m : markers) {
      int64_t pos = position(m);
      if (pos >= 0) marks[lab.component[pos]] += 1;
    }
    best = 0;
    for (int32_t ord = 1; ord < static_cast<int32_t>(lab.size.size()); ++ord) {
      if (marks[ord] > marks[best] ||
          (marks[ord] == marks[best] && lab.size[ord] > lab.size[best])) {
        best = ord;
      }
    }
  }
  std::vector<int64_t> out;
  for (size_t i = 0; i < cl.size(); ++i) {
    if (lab.component[i] == best) out.push_back(cl[i]);
  }
  return out;
}

RegularityRatioEstimate estimate_regularity_ratio(const Environment& env,
                                                  const TriadicCube& cube,
                                                  const std::string& kind,
                                                  double exponent, int trials) {
  if (kind != "RH" && kind != "ME") throw std::invalid_argument("kind must be RH or ME");
  TriadicCube tripled = enlarged(cube, 1);
  if (!env.window.as_cube().contains(tripled)) {
    throw std::invalid_argument("tripled cube leaves the window");
  }
  RegularityRatioEstimate est;
  est.cube = cube;
  est.kind = kind;
  est.exponent = exponent;
  est.trials = trials;

  std::vector<int64_t> cstar = crossing_cluster_vertices(env, cube);
  if (cstar.empty()) {
    est.no_cluster = true;
    return est;
  }
  // Maximal cluster of the tripled cube containing the inner crossing cluster.
  Box tbox = Box::of_cube(tripled);
  ClusterLabeling lab = label_clusters(env, tbox);
  int32_t comp = lab.component[tbox.local_index(env.window.vertex_at(cstar.front()))];
  std::vector<int64_t> cmax;
  for (int64_t i = 0; i < tbox.vertex_count(); ++i) {
    if (lab.component[i] == comp) cmax.push_back(env.window.index(tbox.vertex_at(i)));
  }
  std::sort(cmax.begin(), cmax.end());

  std::vector<uint8_t> is_boundary(cmax.size(), 0);
  bool any_boundary = false;
  for (size_t i = 0; i < cmax.size(); ++i) {
    Vertex x = env.window.vertex_at(cmax[i]);
    for (int a = 0; a < tbox.dim; ++a) {
      if (x[a] == tbox.lo[a] || x[a] == tbox.hi[a]) {
        is_boundary[i] = 1;
        any_boundary = true;
        break;
      }
    }
  }
  if (!any_boundary) return est;  // only constants are harmonic: degenerate

  std::vector<uint8_t> in_cstar_mask(cmax.size(), 0);
  {
    size_t j = 0;
    for (size_t i = 0; i < cmax.size(); ++i) {
      while (j < cstar.size() && cstar[j] < cmax[i]) ++j;
      if (j < cstar.size() && cstar[j] == cmax[i]) in_cstar_mask[i] = 1;
    }
  }

  const double inner_count = static_cast<double>(cube.vertex_count());
  const double outer_count = static_cast<double>(tripled.vertex_count());
  const int d = env.window.dim;
  const uint64_t W = static_cast<uint64_t>(env.window.vertex_count());

  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> g(cmax.size(), 0.0);
    for (size_t i = 0; i < cmax.size(); ++i) {
      if (!is_boundary[i]) continue;
      double u01 = rng_uniform(env.master_seed, env.env_index, RngStream::kBoundaryData,
                               static_cast<uint64_t>(trial) * W +
                                   static_cast<uint64_t>(cmax[i]));
      g[i] = 2.0 * u01 - 1.0;
    }
    std::vector<double> u = solve_dirichlet(env, cmax, is_boundary, g, SolveOptions{});

    // Per-vertex squared gradient over open edges inside the cluster.
    std::vector<double> g2 = grad_sq(env, cmax, u);
    double num = 0.0, den = 0.0;
    if (kind == "RH") {
      double sp = exponent / (exponent - 1.0);         // Holder conjugate
      double q = sp * 2.0 * d / (d + 2.0);             // s' * 2_*
      double s_num = 0.0, s_den = 0.0;
      for (size_t i = 0; i < cmax.size(); ++i) {
        if (in_cstar_mask[i]) s_num += g2[i];
        s_den += std::pow(g2[i], q / 2.0);
      }
      num = std::sqrt(s_num / inner_count);
      den = std::pow(s_den / outer_count, 1.0 / q);
    } else {
      double pe = 2.0 + exponent;
      double s_num = 0.0, s_den = 0.0;
      for (size_t i = 0; i < cmax.size(); ++i) {
        if (in_cstar_mask[i]) s_num += std::pow(g2[i], pe / 2.0);
        s_den += g2[i];
      }
      num = std::pow(s_num / inner_count, 1.0 / pe);
      den = std::sqrt(s_den / outer_count);
    }
    if (den > 0.0) est.estimate = std::max(est.estimate, num / den);
  }
  return est;
}

}  // namespace perchomog
