#include "perchomog/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perchomog {
namespace {

int64_t find_position(const std::vector<int64_t>& sorted, int64_t key) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), key);
  if (it == sorted.end() || *it != key) return -1;
  return it - sorted.begin();
}

void check_sorted_unique(const std::vector<int64_t>& v) {
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i - 1] >= v[i]) throw std::invalid_argument("vertex set must be sorted and unique");
  }
}

}  // namespace

int64_t EdgeField::position_of(int64_t window_index) const {
  return find_position(vertices, window_index);
}

EdgeField make_edge_field(const Window& window, std::vector<int64_t> vertices) {
  check_sorted_unique(vertices);
  EdgeField f;
  f.window = window;
  f.vertices = std::move(vertices);
  const int64_t h = window.halfwidth();
  for (int64_t i = 0; i < static_cast<int64_t>(f.vertices.size()); ++i) {
    const Vertex x = window.vertex_at(f.vertices[i]);
    for (int a = 0; a < window.dim; ++a) {
      if (x[a] + 1 > h) continue;
      Vertex y = x;
      y[a] += 1;
      const int64_t j = find_position(f.vertices, window.index(y));
      if (j < 0) continue;
      f.tail.push_back(static_cast<int32_t>(i));
      f.head.push_back(static_cast<int32_t>(j));
      f.axis.push_back(static_cast<int8_t>(a));
      f.value.push_back(0.0);
    }
  }
  return f;
}

EdgeField gradient_field(const Window& window, std::vector<int64_t> vertices,
                         const std::vector<double>& u) {
  EdgeField f = make_edge_field(window, std::move(vertices));
  if (u.size() != f.vertices.size()) throw std::invalid_argument("value size mismatch");
  for (int64_t e = 0; e < f.edge_count(); ++e) {
    f.value[e] = u[f.tail[e]] - u[f.head[e]];
  }
  return f;
}

EdgeField flux_field(const Environment& env, std::vector<int64_t> vertices,
                     const std::vector<double>& u) {
  EdgeField f = make_edge_field(env.window, std::move(vertices));
  if (u.size() != f.vertices.size()) throw std::invalid_argument("value size mismatch");
  for (int64_t e = 0; e < f.edge_count(); ++e) {
    const Vertex x = env.window.vertex_at(f.vertices[f.tail[e]]);
    f.value[e] = env.a(x, f.axis[e]) * (u[f.tail[e]] - u[f.head[e]]);
  }
  return f;
}

EdgeField constant_field(const Window& window, std::vector<int64_t> vertices,
                         const Direction& q) {
  EdgeField f = make_edge_field(window, std::move(vertices));
  for (int64_t e = 0; e < f.edge_count(); ++e) {
    f.value[e] = -q[f.axis[e]];
  }
  return f;
}

double inner(const EdgeField& F, const EdgeField& G) {
  if (F.vertices != G.vertices || F.edge_count() != G.edge_count()) {
    throw std::invalid_argument("edge fields have different supports");
  }
  double s = 0.0;
  for (int64_t e = 0; e < F.edge_count(); ++e) s += F.value[e] * G.value[e];
  return 2.0 * s;
}

double mag(const EdgeField& F, const Vertex& x) {
  const int64_t pos = F.position_of(F.window.index(x));
  if (pos < 0) throw std::invalid_argument("vertex not in field support");
  double s = 0.0;
  // Edges are sorted by tail position; take the run with tail == pos, then
  // look up the incoming edge along each axis by its own tail position.
  auto lo = std::lower_bound(F.tail.begin(), F.tail.end(), static_cast<int32_t>(pos));
  for (auto it = lo; it != F.tail.end() && *it == pos; ++it) {
    const int64_t e = it - F.tail.begin();
    s += F.value[e] * F.value[e];
  }
  for (int a = 0; a < F.window.dim; ++a) {
    Vertex y = x;
    y[a] -= 1;
    if (y[a] < -F.window.halfwidth()) continue;
    const int64_t j = F.position_of(F.window.index(y));
    if (j < 0) continue;
    auto jt = std::lower_bound(F.tail.begin(), F.tail.end(), static_cast<int32_t>(j));
    for (; jt != F.tail.end() && *jt == j; ++jt) {
      const int64_t e = jt - F.tail.begin();
      if (F.axis[e] == a) {
        s += F.value[e] * F.value[e];
        break;
      }
    }
  }
  return std::sqrt(0.5 * s);
}

std::vector<double> mag_sq_all(const EdgeField& F) {
  std::vector<double> out(F.vertices.size(), 0.0);
  for (int64_t e = 0; e < F.edge_count(); ++e) {
    const double half_sq = 0.5 * F.value[e] * F.value[e];
    out[F.tail[e]] += half_sq;
    out[F.head[e]] += half_sq;
  }
  return out;
}

std::vector<double> grad_sq(const Environment& env, const std::vector<int64_t>& vertices,
                            const std::vector<double>& u) {
  check_sorted_unique(vertices);
  if (u.size() != vertices.size()) throw std::invalid_argument("value size mismatch");
  std::vector<double> out(vertices.size(), 0.0);
  const Window& w = env.window;
  const int64_t h = w.halfwidth();
  for (int64_t i = 0; i < static_cast<int64_t>(vertices.size()); ++i) {
    const Vertex x = w.vertex_at(vertices[i]);
    for (int a = 0; a < w.dim; ++a) {
      if (x[a] + 1 > h) continue;
      if (!env.open(x, a)) continue;
      Vertex y = x;
      y[a] += 1;
      const int64_t j = find_position(vertices, w.index(y));
      if (j < 0) continue;
      const double du = u[i] - u[j];
      out[i] += 0.5 * du * du;
      out[j] += 0.5 * du * du;
    }
  }
  return out;
}

double dirichlet_inner(const Environment& env, const std::vector<int64_t>& vertices,
                       const std::vector<double>& u, const std::vector<double>& w) {
  check_sorted_unique(vertices);
  if (u.size() != vertices.size() || w.size() != vertices.size()) {
    throw std::invalid_argument("value size mismatch");
  }
  const Window& win = env.window;
  const int64_t h = win.halfwidth();
  double s = 0.0;
  for (int64_t i = 0; i < static_cast<int64_t>(vertices.size()); ++i) {
    const Vertex x = win.vertex_at(vertices[i]);
    for (int a = 0; a < win.dim; ++a) {
      if (x[a] + 1 > h) continue;
      const double ae = env.a(x, a);
      if (ae <= 0.0) continue;
      Vertex y = x;
      y[a] += 1;
      const int64_t j = find_position(vertices, win.index(y));
      if (j < 0) continue;
      s += ae * (u[i] - u[j]) * (w[i] - w[j]);
    }
  }
  return 2.0 * s;
}

double flux_inner(const Environment& env, const std::vector<int64_t>& vertices,
                  const Direction& p, const std::vector<double>& w) {
  check_sorted_unique(vertices);
  if (w.size() != vertices.size()) throw std::invalid_argument("value size mismatch");
  const Window& win = env.window;
  const int64_t h = win.halfwidth();
  double s = 0.0;
  for (int64_t i = 0; i < static_cast<int64_t>(vertices.size()); ++i) {
    const Vertex x = win.vertex_at(vertices[i]);
    for (int a = 0; a < win.dim; ++a) {
      if (x[a] + 1 > h) continue;
      const double ae = env.a(x, a);
      if (ae <= 0.0) continue;
      Vertex y = x;
      y[a] += 1;
      const int64_t j = find_position(vertices, win.index(y));
      if (j < 0) continue;
      // p(x, y) = p . (x - y) = -p[a] on the canonical orientation.
      s += (-p[a]) * ae * (w[i] - w[j]);
    }
  }
  return 2.0 * s;
}

double geometric_inner(const Window& window, const std::vector<int64_t>& vertices,
                       const Direction& q, const std::vector<double>& u) {
  check_sorted_unique(vertices);
  if (u.size() != vertices.size()) throw std::invalid_argument("value size mismatch");
  const int64_t h = window.halfwidth();
  double s = 0.0;
  for (int64_t i = 0; i < static_cast<int64_t>(vertices.size()); ++i) {
    const Vertex x = window.vertex_at(vertices[i]);
    for (int a = 0; a < window.dim; ++a) {
      if (x[a] + 1 > h) continue;
      Vertex y = x;
      y[a] += 1;
      const int64_t j = find_position(vertices, window.index(y));
      if (j < 0) continue;
      s += (-q[a]) * (u[i] - u[j]);
    }
  }
  return 2.0 * s;
}

}  // namespace perchomog
