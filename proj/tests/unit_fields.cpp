#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "perchomog/coarsen.hpp"
#include "perchomog/fields.hpp"
#include "perchomog/partition.hpp"
#include "test_util.hpp"

using namespace perchomog;

namespace {

// Signed value F(x, y) read straight from storage; fails the test when the
// pair is not an in-set edge.
double field_value(const EdgeField& F, const Vertex& x, const Vertex& y) {
  const int64_t xi = F.window.index(x), yi = F.window.index(y);
  for (int64_t e = 0; e < F.edge_count(); ++e) {
    const int64_t t = F.vertices[size_t(F.tail[e])];
    const int64_t h = F.vertices[size_t(F.head[e])];
    if (t == xi && h == yi) return F.value[size_t(e)];
    if (t == yi && h == xi) return -F.value[size_t(e)];
  }
  REQUIRE(false);
  return 0.0;
}

// Ordered-pair sum over adjacent in-set pairs, written from the definition.
double naive_inner(const EdgeField& F, const EdgeField& G) {
  double s = 0.0;
  for (size_t i = 0; i < F.vertices.size(); ++i) {
    const Vertex x = F.window.vertex_at(F.vertices[i]);
    for (int a = 0; a < F.window.dim; ++a) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        Vertex y = x;
        y[a] += sgn;
        if (!F.window.contains(y)) continue;
        if (!std::binary_search(F.vertices.begin(), F.vertices.end(),
                                F.window.index(y))) {
          continue;
        }
        s += field_value(F, x, y) * field_value(G, x, y);
      }
    }
  }
  return s;
}

}  // namespace

TEST_CASE("edge fields store each in-set edge once in canonical order") {
  Window w{2, 1};
  std::vector<int64_t> all(size_t(w.vertex_count()));
  for (size_t i = 0; i < all.size(); ++i) all[i] = int64_t(i);
  EdgeField F = make_edge_field(w, all);
  CHECK(F.edge_count() == 12);  // 2 axes * 2 columns * 3 rows on a 3x3 grid
  for (int64_t e = 0; e < F.edge_count(); ++e) {
    Vertex t = w.vertex_at(F.vertices[size_t(F.tail[e])]);
    Vertex h = w.vertex_at(F.vertices[size_t(F.head[e])]);
    t[F.axis[size_t(e)]] += 1;
    CHECK(t == h);
    if (e > 0) {
      CHECK(std::pair(F.tail[size_t(e - 1)], F.axis[size_t(e - 1)]) <
            std::pair(F.tail[size_t(e)], F.axis[size_t(e)]));
    }
  }
  // Dropping the center vertex removes its four incident edges.
  std::vector<int64_t> holed;
  for (int64_t i : all) {
    if (w.vertex_at(i) != Vertex{0, 0, 0}) holed.push_back(i);
  }
  CHECK(make_edge_field(w, holed).edge_count() == 8);
}

TEST_CASE("gradient flux and constant fields match their definitions") {
  auto env = testutil::make_env(2, 1, [](const Vertex& x, int a) {
    return (a == 0 && x[0] == 0 && x[1] == 0) ? 0.0 : 0.5;
  });
  const Window& w = env.window;
  std::vector<int64_t> all(size_t(w.vertex_count()));
  for (size_t i = 0; i < all.size(); ++i) all[i] = int64_t(i);
  std::vector<double> u(all.size());
  for (size_t i = 0; i < all.size(); ++i) {
    const Vertex x = w.vertex_at(all[i]);
    u[i] = 2.0 * x[0] - x[1];
  }
  EdgeField g = gradient_field(w, all, u);
  CHECK(field_value(g, Vertex{0, 0, 0}, Vertex{1, 0, 0}) == doctest::Approx(-2.0));
  CHECK(field_value(g, Vertex{0, 0, 0}, Vertex{0, 1, 0}) == doctest::Approx(1.0));
  EdgeField f = flux_field(env, all, u);
  CHECK(field_value(f, Vertex{0, 0, 0}, Vertex{1, 0, 0}) == doctest::Approx(0.0));
  // u(-1,0) - u(0,0) = -2, conductance 0.5.
  CHECK(field_value(f, Vertex{-1, 0, 0}, Vertex{0, 0, 0}) == doctest::Approx(-1.0));
  EdgeField q = constant_field(w, all, Direction{3.0, -1.0, 0.0});
  CHECK(field_value(q, Vertex{1, 0, 0}, Vertex{0, 0, 0}) == doctest::Approx(3.0));
  CHECK(field_value(q, Vertex{0, 0, 0}, Vertex{0, 1, 0}) == doctest::Approx(1.0));
}

TEST_CASE("inner products agree with the ordered-pair oracle") {
  Window w{2, 2};
  std::vector<int64_t> set;
  for (int64_t i = 0; i < w.vertex_count(); ++i) {
    if (i % 5 != 0) set.push_back(i);  // punch holes to exercise membership
  }
  auto u = testutil::ragged_values(set.size(), 3);
  auto v = testutil::ragged_values(set.size(), 4);
  EdgeField F = gradient_field(w, set, u);
  EdgeField G = gradient_field(w, set, v);
  CHECK(inner(F, G) == doctest::Approx(naive_inner(F, G)).epsilon(1e-12));
  EdgeField Q = constant_field(w, set, Direction{1.0, 2.0, 0.0});
  CHECK(inner(F, Q) == doctest::Approx(naive_inner(F, Q)).epsilon(1e-12));
}

TEST_CASE("pointwise magnitude follows the half-sum rule") {
  Window w{2, 1};
  std::vector<int64_t> all(size_t(w.vertex_count()));
  for (size_t i = 0; i < all.size(); ++i) all[i] = int64_t(i);
  std::vector<double> u(all.size());
  for (size_t i = 0; i < all.size(); ++i) u[i] = w.vertex_at(all[i])[0];
  EdgeField F = gradient_field(w, all, u);
  // Interior vertex: two axis-0 edges of slope 1, so |F| = sqrt(1/2 * 2) = 1.
  CHECK(mag(F, Vertex{0, 0, 0}) == doctest::Approx(1.0));
  // Corner: one axis-0 edge, |F| = sqrt(1/2).
  CHECK(mag(F, Vertex{-1, -1, 0}) == doctest::Approx(std::sqrt(0.5)));
  auto all_sq = mag_sq_all(F);
  for (size_t i = 0; i < all.size(); ++i) {
    CHECK(all_sq[i] ==
          doctest::Approx(std::pow(mag(F, w.vertex_at(all[i])), 2)).epsilon(1e-12));
  }
}

TEST_CASE("grad_sq counts only open in-set edges") {
  auto env = testutil::make_env(2, 1, [](const Vertex& x, int a) {
    return (a == 0 && x[0] == 0 && x[1] == 0) ? 0.0 : 1.0;
  });
  const Window& w = env.window;
  std::vector<int64_t> all(size_t(w.vertex_count()));
  for (size_t i = 0; i < all.size(); ++i) all[i] = int64_t(i);
  std::vector<double> u(all.size());
  for (size_t i = 0; i < all.size(); ++i) u[i] = w.vertex_at(all[i])[0];
  auto gs = grad_sq(env, all, u);
  // Center lost its +x edge: 1/2 * (1 closed-skipped + 1 open) = 1/2.
  CHECK(gs[size_t(w.index(Vertex{0, 0, 0}))] == doctest::Approx(0.5));
  CHECK(gs[size_t(w.index(Vertex{0, -1, 0}))] == doctest::Approx(1.0));
}

TEST_CASE("weighted inner products agree with field compositions") {
  auto env = sample_environment({LawKind::kTwoPoint, 0.6, 0.3}, Window{2, 2}, 17, 0);
  const Window& w = env.window;
  std::vector<int64_t> set;
  for (int64_t i = 0; i < w.vertex_count(); ++i) {
    if (i % 7 != 2) set.push_back(i);
  }
  auto u = testutil::ragged_values(set.size(), 5);
  auto v = testutil::ragged_values(set.size(), 6);
  EdgeField gu = gradient_field(w, set, u);
  EdgeField fv = flux_field(env, set, v);
  CHECK(dirichlet_inner(env, set, u, v) ==
        doctest::Approx(naive_inner(gu, fv)).epsilon(1e-12));
  EdgeField p = constant_field(w, set, Direction{0.5, -2.0, 0.0});
  CHECK(flux_inner(env, set, Direction{0.5, -2.0, 0.0}, v) ==
        doctest::Approx(naive_inner(p, fv)).epsilon(1e-12));
  CHECK(geometric_inner(w, set, Direction{0.5, -2.0, 0.0}, u) ==
        doctest::Approx(naive_inner(p, gu)).epsilon(1e-12));
}

TEST_CASE("anchors sit at cluster points nearest the element center") {
  auto env = testutil::full_lattice(2, 2);
  Partition P = partition_P(env);
  for (const auto& e : P.elements) {
    bool tie = false;
    auto a = anchor_vertex(env, e, &tie);
    REQUIRE(a.has_value());
    CHECK(*a == e.center);
    CHECK(!tie);
    CHECK(anchor(P, env, e) == e.center);
  }
  CHECK_THROWS(anchor(P, env, cube_of(Vertex{0, 0, 0}, 2, 2)));
}

TEST_CASE("anchor ties break lexicographically") {
  // Isolate the center of a 3x3 grid; the crossing cluster is the ring, all
  // at Chebyshev distance one.
  auto env = testutil::make_env(2, 1, [](const Vertex& x, int a) {
    const Vertex y{int32_t(x[0] + (a == 0)), int32_t(x[1] + (a == 1)), 0};
    const bool xc = x[0] == 0 && x[1] == 0;
    const bool yc = y[0] == 0 && y[1] == 0;
    return (xc || yc) ? 0.0 : 1.0;
  });
  TriadicCube c = env.window.as_cube();
  bool tie = false;
  auto a = anchor_vertex(env, c, &tie);
  REQUIRE(a.has_value());
  CHECK(*a == Vertex{-1, -1, 0});
  CHECK(tie);
}

TEST_CASE("coarsening replaces values by anchor values elementwise") {
  auto env = testutil::full_lattice(2, 2);
  Partition P = partition_P(env);
  Coarsener co(env, P);
  std::vector<int64_t> all(size_t(env.window.vertex_count()));
  for (size_t i = 0; i < all.size(); ++i) all[i] = int64_t(i);
  std::vector<double> u(all.size());
  for (size_t i = 0; i < all.size(); ++i) u[i] = env.window.vertex_at(all[i])[0];
  CoarseFunction f = coarsen(co, all, all, u);
  REQUIRE(f.domain == all);
  for (size_t i = 0; i < all.size(); ++i) {
    CHECK(f.value[i] == doctest::Approx(P.element_at(all[i]).center[0]));
  }
  // The coarse gradient vanishes inside elements and jumps at interfaces.
  EdgeField g = coarse_gradient(f);
  CHECK(field_value(g, Vertex{0, 0, 0}, Vertex{0, 1, 0}) == doctest::Approx(0.0));
  CHECK(field_value(g, Vertex{1, 0, 0}, Vertex{2, 0, 0}) == doctest::Approx(-3.0));
}

TEST_CASE("coarse flux weights reproduce the coarse pairing and sum to zero") {
  for (uint64_t seed : {2u, 9u}) {
    auto env = sample_environment({LawKind::kBernoulliUnit, 0.7, 1.0}, Window{2, 3},
                                  seed, 0);
    Partition P = partition_P(env);
    auto anchors = compute_anchors(env, P);
    REQUIRE(anchors.missing == 0);
    Coarsener co(env, P);
    std::vector<int64_t> all(size_t(env.window.vertex_count()));
    for (size_t i = 0; i < all.size(); ++i) all[i] = int64_t(i);
    auto u = testutil::ragged_values(all.size(), seed);
    const Direction q{1.25, -0.75, 0.0};

    CoarseFunction f = coarsen(co, all, all, u);
    const double direct = geometric_inner(env.window, all, q, f.value);
    auto weights = coarse_flux_weights(P, all, q);
    double via_weights = 0.0, total = 0.0;
    for (const auto& [ord, wgt] : weights) {
      auto ai = co.anchor_index(ord);
      REQUIRE(ai.has_value());
      via_weights += wgt * u[size_t(*ai)];
      total += wgt;
    }
    CHECK(std::abs(total) < 1e-9);
    CHECK(via_weights == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("pointwise and interface coarsening bounds hold on random data") {
  for (uint64_t seed : {3u, 8u, 15u}) {
    auto env = sample_environment({LawKind::kBernoulliUnit, 0.7, 1.0}, Window{2, 3},
                                  seed, 0);
    Partition P = partition_P(env);
    TriadicCube U = cube_of(Vertex{0, 0, 0}, 2, 2);
    if (P.element_at(U.center).level > U.level) continue;
    auto U_idx = cube_window_indices(env.window, U);
    auto cl = cl_closure(P, U_idx);
    auto cstar = cluster_C_star_union(env, P, U_idx);
    if (cstar.empty()) continue;
    auto w = testutil::ragged_values(cstar.size(), seed + 100);
    Coarsener co(env, P);
    auto pw = check_coarse_pointwise(co, cl, cstar, w);
    CHECK(pw.checked == int64_t(cstar.size()));
    CHECK(pw.violations == 0);
    auto ib = check_interface_gradient(co, cl, cstar, w);
    CHECK(ib.violations == 0);
  }
}

TEST_CASE("sobolev style summation bound behaves and validates exponents") {
  auto env = testutil::full_lattice(2, 2);
  Partition P = partition_P(env);
  Coarsener co(env, P);
  TriadicCube U = env.window.as_cube();
  auto cstar = cluster_C_star_union(env, P, cube_window_indices(env.window, U));
  REQUIRE(int64_t(cstar.size()) == env.window.vertex_count());
  std::vector<double> w(cstar.size());
  for (size_t i = 0; i < cstar.size(); ++i) w[i] = env.window.vertex_at(cstar[i])[0];
  CHECK_THROWS(sobolev_check(co, U, cstar, w, 1.5));
  auto rep = sobolev_check(co, U, cstar, w, 2.0);
  CHECK(rep.s_star == doctest::Approx(1.0));
  CHECK(!rep.degenerate);
  // Mean-zero input: lhs is the raw second moment of x0 over the window.
  CHECK(rep.lhs == doctest::Approx(540.0));
  CHECK(rep.rhs > 0.0);
  CHECK(rep.ratio > 0.0);
  auto flat = sobolev_check(co, U, cstar, std::vector<double>(cstar.size(), 7.0), 2.0);
  CHECK(flat.degenerate);
  CHECK(flat.ratio == 0.0);
}

TEST_CASE("multiscale poincare bound on affine and random data") {
  Window w{2, 2};
  std::vector<double> u(size_t(w.vertex_count()));
  for (size_t i = 0; i < u.size(); ++i) u[i] = w.vertex_at(int64_t(i))[0];
  CHECK_THROWS(multiscale_poincare(w, u, 0));  // below the m/2 cutoff
  auto top = multiscale_poincare(w, u, 2);
  CHECK(top.lhs == doctest::Approx(std::sqrt(20.0 / 3.0)));
  CHECK(top.rhs == doctest::Approx(9.0 * std::sqrt(8.0 / 9.0)));
  CHECK(top.ratio <= 1.0);
  auto split = multiscale_poincare(w, u, 1);
  CHECK(split.lhs == doctest::Approx(top.lhs));
  // Affine data: one tile term of 3 * (2*(3-1)/3) on top of the gradient term.
  CHECK(split.rhs == doctest::Approx(3.0 * std::sqrt(8.0 / 9.0) + 4.0));
  CHECK(split.ratio <= 1.0);
  auto rough = testutil::ragged_values(u.size(), 42);
  for (int n : {1, 2}) {
    auto rep = multiscale_poincare(w, rough, n);
    CHECK(rep.ratio <= 1.0);  // rough data is dominated by the gradient term
  }
  CHECK(multiscale_poincare(w, std::vector<double>(u.size(), 3.0), 2).ratio == 0.0);
}

TEST_CASE("caccioppoli ratio on the full lattice with affine data") {
  auto env = testutil::full_lattice(2, 2);
  TriadicCube inner = cube_of(Vertex{0, 0, 0}, 1, 2);
  auto outer_idx = cube_window_indices(env.window, env.window.as_cube());
  auto inner_idx = cube_window_indices(env.window, inner);
  std::vector<double> u(outer_idx.size());
  for (size_t i = 0; i < u.size(); ++i) u[i] = env.window.vertex_at(outer_idx[i])[0];
  // energy(inner) = 6 axis-0 edges, oscillation = 540, scale 3^2 = 9.
  CHECK(caccioppoli_ratio(env, 1, inner_idx, outer_idx, u) ==
        doctest::Approx(9.0 * 6.0 / 540.0));
  CHECK(caccioppoli_ratio(env, 1, inner_idx, outer_idx,
                          std::vector<double>(u.size(), 1.0)) == 0.0);
}
