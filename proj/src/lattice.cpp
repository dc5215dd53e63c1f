#include "perchomog/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <stdexcept>

namespace perchomog {

int64_t pow3(int level) {
  int64_t v = 1;
  for (int i = 0; i < level; ++i) v *= 3;
  return v;
}

int64_t TriadicCube::vertex_count() const {
  int64_t n = 1;
  for (int i = 0; i < dim; ++i) n *= size();
  return n;
}

bool TriadicCube::contains(const Vertex& x) const {
  const int64_t h = halfwidth();
  for (int i = 0; i < dim; ++i)
    if (std::abs(int64_t{x[i]} - center[i]) > h) return false;
  return true;
}

bool TriadicCube::contains(const TriadicCube& other) const {
  if (other.level > level) return false;
  return contains(other.center);
}

int64_t TriadicCube::dist(const TriadicCube& other) const {
  const int64_t ha = halfwidth();
  const int64_t hb = other.halfwidth();
  int64_t d = 0;
  for (int i = 0; i < dim; ++i) {
    int64_t gap = std::abs(int64_t{center[i]} - other.center[i]) - ha - hb;
    d = std::max(d, gap);
  }
  return d;
}

int64_t Window::vertex_count() const {
  int64_t n = 1;
  for (int i = 0; i < dim; ++i) n *= side();
  return n;
}

bool Window::contains(const Vertex& x) const {
  const int64_t h = halfwidth();
  for (int i = 0; i < dim; ++i)
    if (std::abs(int64_t{x[i]}) > h) return false;
  return true;
}

bool Window::contains(const TriadicCube& c) const {
  return as_cube().contains(c.center) && c.level <= level;
}

int64_t Window::index(const Vertex& x) const {
  const int64_t L = side();
  const int64_t h = L / 2;
  int64_t idx = 0;
  for (int i = 0; i < dim; ++i) idx = idx * L + (x[i] + h);
  return idx;
}

Vertex Window::vertex_at(int64_t index) const {
  const int64_t L = side();
  const int64_t h = L / 2;
  Vertex x{0, 0, 0};
  for (int i = dim - 1; i >= 0; --i) {
    x[i] = static_cast<int32_t>(index % L - h);
    index /= L;
  }
  return x;
}

namespace {
// Round x to the nearest multiple of m (m odd), so that the result is the
// center of the size-m block containing x.
int64_t snap(int64_t x, int64_t m) {
  int64_t h = (m - 1) / 2;
  int64_t shifted = x + h;
  int64_t q = shifted >= 0 ? shifted / m : -((-shifted + m - 1) / m);
  return q * m;
}
}  // namespace

TriadicCube cube_of(const Vertex& x, int level, int dim) {
  if (level < 0 || level > kMaxLevel) throw std::invalid_argument("cube_of: bad level");
  TriadicCube c;
  c.dim = dim;
  c.level = level;
  const int64_t m = pow3(level);
  for (int i = 0; i < dim; ++i) c.center[i] = static_cast<int32_t>(snap(x[i], m));
  return c;
}

TriadicCube predecessor(const TriadicCube& c) {
  return cube_of(c.center, c.level + 1, c.dim);
}

std::vector<TriadicCube> successors(const TriadicCube& c) {
  if (c.level < 1) throw std::invalid_argument("successors: level-0 cube has none");
  std::vector<TriadicCube> out;
  const int64_t step = pow3(c.level - 1);
  const int n = c.dim;
  std::array<int, 3> k{0, 0, 0};
  const int total = static_cast<int>(pow3(n));
  for (int t = 0; t < total; ++t) {
    int rem = t;
    TriadicCube s;
    s.dim = c.dim;
    s.level = c.level - 1;
    for (int i = n - 1; i >= 0; --i) {
      k[i] = rem % 3 - 1;
      rem /= 3;
    }
    for (int i = 0; i < n; ++i)
      s.center[i] = static_cast<int32_t>(c.center[i] + k[i] * step);
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

TriadicCube enlarged(const TriadicCube& c, int k) {
  TriadicCube e = c;
  e.level = c.level + k;
  return e;
}

std::vector<Vertex> cube_vertices(const TriadicCube& c) {
  std::vector<Vertex> out;
  out.reserve(static_cast<size_t>(c.vertex_count()));
  const int64_t h = c.halfwidth();
  if (c.dim == 2) {
    for (int64_t a = -h; a <= h; ++a)
      for (int64_t b = -h; b <= h; ++b)
        out.push_back(Vertex{static_cast<int32_t>(c.center[0] + a),
                             static_cast<int32_t>(c.center[1] + b), 0});
  } else {
    for (int64_t a = -h; a <= h; ++a)
      for (int64_t b = -h; b <= h; ++b)
        for (int64_t cc = -h; cc <= h; ++cc)
          out.push_back(Vertex{static_cast<int32_t>(c.center[0] + a),
                               static_cast<int32_t>(c.center[1] + b),
                               static_cast<int32_t>(c.center[2] + cc)});
  }
  return out;
}

int64_t edge_index(const Window& w, const EdgeRef& e) {
  return int64_t{e.axis} * w.vertex_count() + w.index(e.base);
}

int64_t edge_count(const Window& w) {
  const int64_t L = w.side();
  int64_t per_axis = L - 1;
  for (int i = 1; i < w.dim; ++i) per_axis *= L;
  return per_axis * w.dim;
}

std::vector<EdgeRef> enumerate_edges(const Window& w) {
  std::vector<EdgeRef> out;
  out.reserve(static_cast<size_t>(edge_count(w)));
  const int64_t n = w.vertex_count();
  for (int axis = 0; axis < w.dim; ++axis) {
    for (int64_t idx = 0; idx < n; ++idx) {
      EdgeRef e{w.vertex_at(idx), axis};
      if (w.contains(e.other())) out.push_back(e);
    }
  }
  return out;
}

std::vector<Vertex> interior_vertices(const Region& r, int dim) {
  std::set<Vertex> in(r.vertices.begin(), r.vertices.end());
  std::vector<Vertex> out;
  for (const Vertex& x : r.vertices) {
    bool interior = true;
    for (int i = 0; i < dim && interior; ++i) {
      for (int s = -1; s <= 1 && interior; s += 2) {
        Vertex y = x;
        y[i] += s;
        if (!in.count(y)) interior = false;
      }
    }
    if (interior) out.push_back(x);
  }
  return out;
}

std::vector<Vertex> boundary_vertices(const Region& r, int dim) {
  std::set<Vertex> in(r.vertices.begin(), r.vertices.end());
  std::vector<Vertex> out;
  for (const Vertex& x : r.vertices) {
    bool interior = true;
    for (int i = 0; i < dim && interior; ++i) {
      for (int s = -1; s <= 1 && interior; s += 2) {
        Vertex y = x;
        y[i] += s;
        if (!in.count(y)) interior = false;
      }
    }
    if (!interior) out.push_back(x);
  }
  return out;
}

Region region_of_cube(const TriadicCube& c) { return Region{cube_vertices(c)}; }

std::vector<int64_t> cube_window_indices(const Window& w, const TriadicCube& c) {
  std::vector<int64_t> out;
  out.reserve(size_t(c.vertex_count()));
  for (const Vertex& v : cube_vertices(c)) out.push_back(w.index(v));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace perchomog
