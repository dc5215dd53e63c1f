#include "perchomog/coarsen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "perchomog/cluster.hpp"

namespace perchomog {
namespace {

int64_t find_position(const std::vector<int64_t>& sorted, int64_t key) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), key);
  if (it == sorted.end() || *it != key) return -1;
  return it - sorted.begin();
}

int64_t linf_dist(const Vertex& a, const Vertex& b, int dim) {
  int64_t m = 0;
  for (int i = 0; i < dim; ++i) m = std::max<int64_t>(m, std::abs(int64_t(a[i]) - b[i]));
  return m;
}

// Distinct element ordinals underlying a sorted set of window indices.
std::vector<int32_t> used_ordinals(const Partition& P, const std::vector<int64_t>& set) {
  std::vector<int32_t> ords;
  for (int64_t wi : set) ords.push_back(P.element_of[wi]);
  std::sort(ords.begin(), ords.end());
  ords.erase(std::unique(ords.begin(), ords.end()), ords.end());
  return ords;
}

// Per-ordinal anchor values of w (given on `support`); throws when an anchor
// is missing or w is undefined there.
std::unordered_map<int32_t, double> anchor_values(Coarsener& coarsener,
                                                  const std::vector<int32_t>& ordinals,
                                                  const std::vector<int64_t>& support,
                                                  const std::vector<double>& w) {
  std::unordered_map<int32_t, double> out;
  for (int32_t ord : ordinals) {
    std::optional<int64_t> ai = coarsener.anchor_index(ord);
    if (!ai) throw std::runtime_error("no anchor for partition element");
    const int64_t pos = find_position(support, *ai);
    if (pos < 0) throw std::runtime_error("function not defined at element anchor");
    out.emplace(ord, w[pos]);
  }
  return out;
}

// Per-ordinal integral of |grad w 1_{a != 0}| over the element's cluster part.
std::unordered_map<int32_t, double> element_gradient_integrals(
    const Environment& env, const Partition& P, const std::vector<int64_t>& cstar,
    const std::vector<double>& w) {
  const std::vector<double> gs = grad_sq(env, cstar, w);
  std::unordered_map<int32_t, double> integral;
  for (size_t i = 0; i < cstar.size(); ++i) {
    integral[P.element_of[cstar[i]]] += std::sqrt(gs[i]);
  }
  return integral;
}

}  // namespace

std::optional<Vertex> anchor_vertex(const Environment& env, const TriadicCube& element,
                                    bool* tie_broken) {
  if (tie_broken) *tie_broken = false;
  const std::vector<int64_t> cluster = crossing_cluster_vertices(env, element);
  if (cluster.empty()) return std::nullopt;
  // Window-index order is lexicographic order on coordinates, so scanning in
  // order and keeping strict improvements applies the lexicographic
  // tie-break automatically.
  int64_t best = std::numeric_limits<int64_t>::max();
  Vertex best_v{0, 0, 0};
  bool saw_tie = false;
  for (int64_t wi : cluster) {
    const Vertex v = env.window.vertex_at(wi);
    const int64_t dist = linf_dist(v, element.center, element.dim);
    if (dist < best) {
      best = dist;
      best_v = v;
      saw_tie = false;
    } else if (dist == best) {
      saw_tie = true;
    }
  }
  if (tie_broken) *tie_broken = saw_tie;
  return best_v;
}

Vertex anchor(const Partition& P, const Environment& env, const TriadicCube& element) {
  if (!(P.element_at(element.center) == element)) {
    throw std::invalid_argument("cube is not a partition element");
  }
  std::optional<Vertex> a = anchor_vertex(env, element);
  if (!a) throw std::runtime_error("no anchor");
  return *a;
}

AnchorMap compute_anchors(const Environment& env, const Partition& P) {
  AnchorMap out;
  out.anchor.resize(P.elements.size());
  out.tie_broken.assign(P.elements.size(), 0);
  for (size_t i = 0; i < P.elements.size(); ++i) {
    bool tie = false;
    out.anchor[i] = anchor_vertex(env, P.elements[i], &tie);
    out.tie_broken[i] = tie ? 1 : 0;
    if (!out.anchor[i]) ++out.missing;
  }
  return out;
}

Coarsener::Coarsener(const Environment& env, const Partition& P) : env_(&env), p_(&P) {
  state_.assign(P.elements.size(), 0);
  anchor_.resize(P.elements.size());
  tie_.assign(P.elements.size(), 0);
}

void Coarsener::ensure(int32_t ordinal) {
  if (state_[ordinal] != 0) return;
  bool tie = false;
  std::optional<Vertex> a = anchor_vertex(*env_, p_->elements[ordinal], &tie);
  tie_[ordinal] = tie ? 1 : 0;
  if (a) {
    anchor_[ordinal] = *a;
    state_[ordinal] = 2;
  } else {
    state_[ordinal] = 1;
  }
}

std::optional<Vertex> Coarsener::anchor_of(int32_t ordinal) {
  ensure(ordinal);
  if (state_[ordinal] == 1) return std::nullopt;
  return anchor_[ordinal];
}

std::optional<int64_t> Coarsener::anchor_index(int32_t ordinal) {
  std::optional<Vertex> a = anchor_of(ordinal);
  if (!a) return std::nullopt;
  return env_->window.index(*a);
}

bool Coarsener::anchor_tie_broken(int32_t ordinal) {
  ensure(ordinal);
  return tie_[ordinal] != 0;
}

CoarseFunction coarsen(Coarsener& coarsener, const std::vector<int64_t>& cl,
                       const std::vector<int64_t>& w_vertices,
                       const std::vector<double>& w_values) {
  if (w_vertices.size() != w_values.size()) throw std::invalid_argument("value size mismatch");
  const Partition& P = coarsener.partition();
  const std::unordered_map<int32_t, double> values =
      anchor_values(coarsener, used_ordinals(P, cl), w_vertices, w_values);
  CoarseFunction f;
  f.window = P.window;
  f.domain = cl;
  f.value.resize(cl.size());
  for (size_t i = 0; i < cl.size(); ++i) {
    f.value[i] = values.at(P.element_of[cl[i]]);
  }
  return f;
}

EdgeField coarse_gradient(const CoarseFunction& f) {
  return gradient_field(f.window, f.domain, f.value);
}

std::vector<std::pair<int32_t, double>> coarse_flux_weights(const Partition& P,
                                                            const std::vector<int64_t>& cl,
                                                            const Direction& q) {
  const Window& w = P.window;
  const int64_t h = w.halfwidth();
  std::unordered_map<int32_t, double> acc;
  for (int64_t wi : cl) {
    const Vertex x = w.vertex_at(wi);
    double s = 0.0;
    for (int a = 0; a < w.dim; ++a) {
      Vertex y = x;
      y[a] += 1;
      if (y[a] <= h && find_position(cl, w.index(y)) >= 0) s += -q[a];
      y[a] -= 2;
      if (y[a] >= -h && find_position(cl, w.index(y)) >= 0) s += q[a];
    }
    if (s != 0.0) acc[P.element_of[wi]] += 2.0 * s;
  }
  std::vector<std::pair<int32_t, double>> out(acc.begin(), acc.end());
  std::sort(out.begin(), out.end());
  return out;
}

PointwiseCoarsenReport check_coarse_pointwise(Coarsener& coarsener,
                                              const std::vector<int64_t>& cl,
                                              const std::vector<int64_t>& cstar,
                                              const std::vector<double>& w) {
  const Environment& env = coarsener.environment();
  const Partition& P = coarsener.partition();
  const std::vector<int32_t> ords = used_ordinals(P, cl);
  const std::unordered_map<int32_t, double> values =
      anchor_values(coarsener, used_ordinals(P, cstar), cstar, w);
  std::unordered_map<int32_t, double> integral =
      element_gradient_integrals(env, P, cstar, w);

  // Right side per element at x: total integral over used elements within
  // distance 1 of it.
  std::unordered_map<int32_t, double> rhs;
  for (int32_t a : ords) {
    double total = 0.0;
    for (const auto& [b, ib] : integral) {
      if (ib > 0.0 && P.elements[a].dist(P.elements[b]) <= 1) total += ib;
    }
    rhs.emplace(a, total);
  }

  PointwiseCoarsenReport rep;
  rep.max_gap = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < cstar.size(); ++i) {
    const int32_t ord = P.element_of[cstar[i]];
    const double lhs = std::abs(w[i] - values.at(ord));
    const double gap = lhs - rhs.at(ord);
    ++rep.checked;
    if (gap > 1e-12) ++rep.violations;
    if (gap > rep.max_gap) {
      rep.max_gap = gap;
      rep.worst = env.window.vertex_at(cstar[i]);
    }
  }
  if (rep.checked == 0) rep.max_gap = 0.0;
  return rep;
}

InterfaceBoundReport check_interface_gradient(Coarsener& coarsener,
                                              const std::vector<int64_t>& cl,
                                              const std::vector<int64_t>& cstar,
                                              const std::vector<double>& w) {
  const Environment& env = coarsener.environment();
  const Partition& P = coarsener.partition();
  const Window& win = env.window;
  const int64_t h = win.halfwidth();
  const std::unordered_map<int32_t, double> values =
      anchor_values(coarsener, used_ordinals(P, cstar), cstar, w);
  std::unordered_map<int32_t, double> integral =
      element_gradient_integrals(env, P, cstar, w);

  InterfaceBoundReport rep;
  rep.max_gap = -std::numeric_limits<double>::infinity();
  for (int64_t wi : cl) {
    const Vertex x = win.vertex_at(wi);
    const int32_t ox = P.element_of[wi];
    for (int a = 0; a < win.dim; ++a) {
      if (x[a] + 1 > h) continue;
      Vertex y = x;
      y[a] += 1;
      const int64_t yi = win.index(y);
      if (find_position(cl, yi) < 0) continue;
      const int32_t oy = P.element_of[yi];
      if (ox == oy) continue;
      auto vx = values.find(ox);
      auto vy = values.find(oy);
      if (vx == values.end() || vy == values.end()) {
        throw std::runtime_error("no anchor value for interface element");
      }
      const double lhs = std::abs(vx->second - vy->second);
      const double rhs = integral[ox] + integral[oy];
      ++rep.interface_edges;
      const double gap = lhs - rhs;
      if (gap > 1e-12) ++rep.violations;
      rep.max_gap = std::max(rep.max_gap, gap);
    }
  }
  if (rep.interface_edges == 0) rep.max_gap = 0.0;
  return rep;
}

SobolevReport sobolev_check(Coarsener& coarsener, const TriadicCube& cube,
                            const std::vector<int64_t>& cstar, std::vector<double> w,
                            double s) {
  const Environment& env = coarsener.environment();
  const Partition& P = coarsener.partition();
  const int d = env.window.dim;
  if (s < double(d) / double(d - 1) - 1e-12) {
    throw std::invalid_argument("exponent out of range");
  }
  (void)cube;
  SobolevReport rep;
  rep.s = s;
  rep.s_star = s * d / (s + d);
  if (cstar.empty()) {
    rep.degenerate = true;
    return rep;
  }
  if (w.size() != cstar.size()) throw std::invalid_argument("value size mismatch");
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= double(w.size());
  for (double& v : w) v -= mean;

  for (double v : w) rep.lhs += std::pow(std::abs(v), s);
  const std::vector<double> gs = grad_sq(env, cstar, w);
  for (size_t i = 0; i < cstar.size(); ++i) {
    const double size = double(P.size_at(cstar[i]));
    rep.rhs += std::pow(size, s * d) * std::pow(gs[i], rep.s_star / 2.0);
  }
  if (rep.lhs == 0.0) {
    rep.ratio = 0.0;
    rep.degenerate = rep.rhs == 0.0;
  } else if (rep.rhs == 0.0) {
    rep.ratio = std::numeric_limits<double>::infinity();
  } else {
    rep.ratio = rep.lhs / std::pow(rep.rhs, s / rep.s_star);
  }
  return rep;
}

MsPoincareReport multiscale_poincare(const Window& window, const std::vector<double>& u,
                                     int n) {
  const int m = window.level;
  if (!(2 * n >= m && n <= m && n >= 0)) {
    throw std::invalid_argument("scale cut must lie in [m/2, m]");
  }
  const int64_t N = window.vertex_count();
  if (int64_t(u.size()) != N) throw std::invalid_argument("value size mismatch");
  MsPoincareReport rep;
  rep.n = n;

  double mean = 0.0;
  for (double v : u) mean += v;
  mean /= double(N);
  double sq = 0.0;
  for (double v : u) sq += (v - mean) * (v - mean);
  rep.lhs = std::sqrt(sq / double(N));

  const int d = window.dim;
  const int64_t L = window.side();
  const int64_t h = window.halfwidth();

  double energy = 0.0;  // sum over unordered in-window edges of (du)^2
  for (int64_t i = 0; i < N; ++i) {
    const Vertex x = window.vertex_at(i);
    for (int a = 0; a < d; ++a) {
      if (x[a] + 1 > h) continue;
      Vertex y = x;
      y[a] += 1;
      const double du = u[i] - u[window.index(y)];
      energy += du * du;
    }
  }
  rep.rhs = double(pow3(n)) * std::sqrt(energy / double(N));

  for (int k = n; k <= m - 1; ++k) {
    const int64_t tile_side = pow3(k);
    const int64_t tiles_per_axis = L / tile_side;
    int64_t n_tiles = 1;
    for (int a = 0; a < d; ++a) n_tiles *= tiles_per_axis;
    std::vector<std::array<double, 3>> acc(n_tiles, {0.0, 0.0, 0.0});

    for (int64_t i = 0; i < N; ++i) {
      const Vertex x = window.vertex_at(i);
      // Tile coordinates: shift to [0, L) and divide by the tile side.
      int64_t tile = 0;
      for (int a = 0; a < d; ++a) {
        tile = tile * tiles_per_axis + (int64_t(x[a]) + h) / tile_side;
      }
      for (int a = 0; a < d; ++a) {
        if (x[a] + 1 > h) continue;
        if ((int64_t(x[a]) + h) % tile_side == tile_side - 1) continue;  // exits the tile
        Vertex y = x;
        y[a] += 1;
        // <e_a, grad u> contribution of this unordered edge: 2 (u(y) - u(x)).
        acc[tile][a] += 2.0 * (u[window.index(y)] - u[i]);
      }
    }

    const double tile_volume = double(pow3(k * d));
    double sum_sq = 0.0;
    for (const auto& v : acc) {
      double norm_sq = 0.0;
      for (int a = 0; a < d; ++a) {
        const double c = v[a] / tile_volume;
        norm_sq += c * c;
      }
      sum_sq += norm_sq;
    }
    rep.rhs += double(tile_side) * std::sqrt(sum_sq / double(n_tiles));
  }

  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

double caccioppoli_ratio(const Environment& env, int inner_level,
                         const std::vector<int64_t>& cstar_inner,
                         const std::vector<int64_t>& cstar_outer,
                         const std::vector<double>& u_outer) {
  if (u_outer.size() != cstar_outer.size()) throw std::invalid_argument("value size mismatch");
  if (cstar_inner.empty() || cstar_outer.empty()) return 0.0;
  std::vector<double> u_inner(cstar_inner.size());
  for (size_t i = 0; i < cstar_inner.size(); ++i) {
    const int64_t pos = find_position(cstar_outer, cstar_inner[i]);
    if (pos < 0) throw std::invalid_argument("inner cluster not contained in outer");
    u_inner[i] = u_outer[pos];
  }
  const std::vector<double> gs = grad_sq(env, cstar_inner, u_inner);
  double energy = 0.0;
  for (double g : gs) energy += g;
  double mean = 0.0;
  for (double v : u_outer) mean += v;
  mean /= double(u_outer.size());
  double osc = 0.0;
  for (double v : u_outer) osc += (v - mean) * (v - mean);
  if (osc == 0.0) return 0.0;
  const double r = double(pow3(inner_level));
  return env.law.lambda * r * r * energy / osc;
}

}  // namespace perchomog
