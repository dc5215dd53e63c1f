#include "perchomog/cluster.hpp"

#include <algorithm>
#include <stdexcept>

namespace perchomog {
namespace {

// Union-find over dense local indices, path halving + union by size.
struct UnionFind {
  std::vector<int32_t> parent;
  std::vector<int32_t> rank_size;

  explicit UnionFind(int64_t n) : parent(n), rank_size(n, 1) {
    for (int64_t i = 0; i < n; ++i) parent[i] = static_cast<int32_t>(i);
  }
  int32_t find(int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int32_t a, int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_size[a] < rank_size[b]) std::swap(a, b);
    parent[b] = a;
    rank_size[a] += rank_size[b];
  }
};

ClusterLabeling finalize(Box box, UnionFind& uf, int64_t n,
                         const std::vector<Vertex>& coords) {
  ClusterLabeling out;
  out.box = box;
  out.component.assign(n, -1);
  std::vector<int32_t> ordinal_of_root(n, -1);
  for (int64_t i = 0; i < n; ++i) {
    int32_t root = uf.find(static_cast<int32_t>(i));
    int32_t ord = ordinal_of_root[root];
    if (ord < 0) {
      ord = static_cast<int32_t>(out.canonical.size());
      ordinal_of_root[root] = ord;
      out.canonical.push_back(i);
      out.size.push_back(0);
      out.bb_lo.push_back({INT64_MAX, INT64_MAX, INT64_MAX});
      out.bb_hi.push_back({INT64_MIN, INT64_MIN, INT64_MIN});
    }
    out.component[i] = ord;
    out.size[ord] += 1;
    const Vertex& x = coords[i];
    for (int a = 0; a < 3; ++a) {
      out.bb_lo[ord][a] = std::min<int64_t>(out.bb_lo[ord][a], x[a]);
      out.bb_hi[ord][a] = std::max<int64_t>(out.bb_hi[ord][a], x[a]);
    }
  }
  for (int32_t ord = 0; ord < static_cast<int32_t>(out.size.size()); ++ord) {
    if (out.largest < 0 || out.size[ord] > out.size[out.largest]) out.largest = ord;
  }
  return out;
}

}  // namespace

Box Box::of_cube(const TriadicCube& c) {
  Box b;
  b.dim = c.dim;
  int64_t h = c.halfwidth();
  for (int i = 0; i < c.dim; ++i) {
    b.lo[i] = c.center[i] - h;
    b.hi[i] = c.center[i] + h;
  }
  return b;
}

int64_t Box::vertex_count() const {
  int64_t n = 1;
  for (int i = 0; i < dim; ++i) {
    if (hi[i] < lo[i]) return 0;
    n *= extent(i);
  }
  return n;
}

bool Box::contains(const Vertex& x) const {
  for (int i = 0; i < dim; ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

int64_t Box::local_index(const Vertex& x) const {
  int64_t idx = 0;
  for (int i = 0; i < dim; ++i) idx = idx * extent(i) + (x[i] - lo[i]);
  return idx;
}

Vertex Box::vertex_at(int64_t local) const {
  Vertex x{0, 0, 0};
  for (int i = dim - 1; i >= 0; --i) {
    int64_t e = extent(i);
    x[i] = static_cast<int32_t>(lo[i] + (local % e));
    local /= e;
  }
  return x;
}

Box Box::intersect(const Box& other) const {
  Box b;
  b.dim = dim;
  for (int i = 0; i < dim; ++i) {
    b.lo[i] = std::max(lo[i], other.lo[i]);
    b.hi[i] = std::min(hi[i], other.hi[i]);
  }
  return b;
}

bool Box::empty() const {
  for (int i = 0; i < dim; ++i) {
    if (hi[i] < lo[i]) return true;
  }
  return false;
}

int64_t ClusterLabeling::diameter(int32_t ordinal) const {
  int64_t diam = 0;
  for (int a = 0; a < box.dim; ++a) {
    diam = std::max(diam, bb_hi[ordinal][a] - bb_lo[ordinal][a]);
  }
  return diam;
}

ClusterLabeling label_clusters(const Environment& env, const Box& box) {
  int64_t n = box.vertex_count();
  if (n <= 0) throw std::invalid_argument("label_clusters: empty box");
  UnionFind uf(n);
  std::vector<Vertex> coords(n);
  for (int64_t i = 0; i < n; ++i) coords[i] = box.vertex_at(i);
  for (int64_t i = 0; i < n; ++i) {
    const Vertex& x = coords[i];
    for (int a = 0; a < box.dim; ++a) {
      if (x[a] + 1 > box.hi[a]) continue;
      if (env.a(EdgeRef{x, a}) <= 0.0) continue;
      Vertex y = x;
      y[a] += 1;
      uf.unite(static_cast<int32_t>(i), static_cast<int32_t>(box.local_index(y)));
    }
  }
  return finalize(box, uf, n, coords);
}

ClusterLabeling label_clusters_subset(const Environment& env,
                                      const std::vector<int64_t>& window_indices) {
  std::vector<int64_t> sorted = window_indices;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  int64_t n = static_cast<int64_t>(sorted.size());
  if (n == 0) throw std::invalid_argument("label_clusters_subset: empty vertex set");
  UnionFind uf(n);
  std::vector<Vertex> coords(n);
  for (int64_t i = 0; i < n; ++i) coords[i] = env.window.vertex_at(sorted[i]);
  auto position = [&](int64_t widx) -> int64_t {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), widx);
    if (it == sorted.end() || *it != widx) return -1;
    return it - sorted.begin();
  };
  int64_t h = env.window.halfwidth();
  for (int64_t i = 0; i < n; ++i) {
    const Vertex& x = coords[i];
    for (int a = 0; a < env.window.dim; ++a) {
      if (x[a] + 1 > h) continue;
      Vertex y = x;
      y[a] += 1;
      int64_t j = position(env.window.index(y));
      if (j < 0) continue;
      if (env.a(EdgeRef{x, a}) <= 0.0) continue;
      uf.unite(static_cast<int32_t>(i), static_cast<int32_t>(j));
    }
  }
  // Box for the labeling is the whole window; component indices refer to
  // positions in the sorted subset, so reuse finalize on subset coordinates
  // and then keep the canonical/local bookkeeping subset-relative.
  ClusterLabeling out = finalize(Box::of_cube(env.window.as_cube()), uf, n, coords);
  return out;
}

bool is_crossable(const Environment& env, const Box& box) {
  ClusterLabeling lab = label_clusters(env, box);
  for (int a = 0; a < box.dim; ++a) {
    bool crossed = false;
    for (size_t ord = 0; ord < lab.size.size() && !crossed; ++ord) {
      crossed = lab.bb_lo[ord][a] == box.lo[a] && lab.bb_hi[ord][a] == box.hi[a];
    }
    if (!crossed) return false;
  }
  return true;
}

bool is_crossable(const Environment& env, const TriadicCube& cube) {
  return is_crossable(env, Box::of_cube(cube));
}

std::optional<int32_t> crossing_component(const ClusterLabeling& labeling) {
  int32_t best = -1;
  for (int32_t ord = 0; ord < static_cast<int32_t>(labeling.size.size()); ++ord) {
    bool crosses = true;
    for (int a = 0; a < labeling.box.dim && crosses; ++a) {
      crosses = labeling.bb_lo[ord][a] == labeling.box.lo[a] &&
                labeling.bb_hi[ord][a] == labeling.box.hi[a];
    }
    if (!crosses) continue;
    if (best < 0 || labeling.size[ord] > labeling.size[best]) best = ord;
  }
  if (best < 0) return std::nullopt;
  return best;
}

std::vector<int64_t> crossing_cluster_vertices(const Environment& env,
                                               const TriadicCube& cube) {
  Box box = Box::of_cube(cube);
  ClusterLabeling lab = label_clusters(env, box);
  auto ord = crossing_component(lab);
  std::vector<int64_t> out;
  if (!ord) return out;
  int64_t n = box.vertex_count();
  for (int64_t i = 0; i < n; ++i) {
    if (lab.component[i] == *ord) out.push_back(env.window.index(box.vertex_at(i)));
  }
  return out;
}

std::vector<int64_t> largest_window_cluster(const Environment& env) {
  Box box = Box::of_cube(env.window.as_cube());
  ClusterLabeling lab = label_clusters(env, box);
  std::vector<int64_t> out;
  if (lab.largest < 0) return out;
  int64_t n = box.vertex_count();
  for (int64_t i = 0; i < n; ++i) {
    if (lab.component[i] == lab.largest) out.push_back(env.window.index(box.vertex_at(i)));
  }
  return out;
}

}  // namespace perchomog
