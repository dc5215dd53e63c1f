#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "perchomog/coarsen.hpp"
#include "perchomog/partition.hpp"
#include "perchomog/solver.hpp"
#include "test_util.hpp"

using namespace perchomog;

namespace {

std::vector<int64_t> all_indices(const Window& w) {
  std::vector<int64_t> out(size_t(w.vertex_count()));
  for (size_t i = 0; i < out.size(); ++i) out[i] = int64_t(i);
  return out;
}

// Energy matrix assembled straight from the environment, bypassing
// ClusterOperator: A[i][j] = -a(e) on open in-set edges, row sums zero.
Eigen::MatrixXd naive_matrix(const Environment& env, const std::vector<int64_t>& set) {
  const int64_t n = int64_t(set.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int64_t i = 0; i < n; ++i) {
    const Vertex x = env.window.vertex_at(set[i]);
    for (int a = 0; a < env.window.dim; ++a) {
      Vertex y = x;
      y[a] += 1;
      if (!env.window.contains(y)) continue;
      auto it = std::lower_bound(set.begin(), set.end(), env.window.index(y));
      if (it == set.end() || *it != env.window.index(y)) continue;
      const int64_t j = it - set.begin();
      const double ae = env.a(x, a);
      if (ae <= 0.0) continue;
      A(i, j) -= ae;
      A(j, i) -= ae;
      A(i, i) += ae;
      A(j, j) += ae;
    }
  }
  return A;
}

// Loads of the coarse pairing found by probing every basis vector through
// the coarsening map itself.
Eigen::VectorXd probed_load(const Environment& env, const Partition& P,
                            const std::vector<int64_t>& cl,
                            const std::vector<int64_t>& cstar, const Direction& q) {
  Coarsener co(env, P);
  Eigen::VectorXd c(cstar.size());
  std::vector<double> basis(cstar.size(), 0.0);
  for (size_t i = 0; i < cstar.size(); ++i) {
    basis[i] = 1.0;
    CoarseFunction f = coarsen(co, cl, cstar, basis);
    c(int64_t(i)) = geometric_inner(env.window, cl, q, f.value);
    basis[i] = 0.0;
  }
  return c;
}

struct OracleResult {
  bool ok = false;
  double objective = 0.0;
  std::vector<double> u;
};

// Constrained quadratic minimum via a dense KKT system: minimize
// u^T A u - c^T u subject to zero divergence at every vertex off the outer
// boundary of the closure.
OracleResult kkt_oracle(const Environment& env, const TriadicCube& U,
                        const Partition& P, const Direction& q) {
  OracleResult res;
  if (P.element_at(U.center).level > U.level) return res;
  auto U_idx = cube_window_indices(env.window, U);
  auto cl = cl_closure(P, U_idx);
  auto cstar = cluster_C_star_union(env, P, U_idx);
  if (cstar.empty()) return res;
  const int64_t n = int64_t(cstar.size());
  Eigen::MatrixXd A = naive_matrix(env, cstar);
  Eigen::VectorXd c = probed_load(env, P, cl, cstar, q);

  // Interior rows: every full-lattice neighbor stays inside the closure.
  std::vector<int64_t> interior;
  const int64_t h = env.window.halfwidth();
  for (int64_t i = 0; i < n; ++i) {
    const Vertex x = env.window.vertex_at(cstar[i]);
    bool inside = true;
    for (int a = 0; a < env.window.dim && inside; ++a) {
      for (int sgn = -1; sgn <= 1 && inside; sgn += 2) {
        Vertex y = x;
        y[a] += sgn;
        if (y[a] < -h || y[a] > h ||
            !std::binary_search(cl.begin(), cl.end(), env.window.index(y))) {
          inside = false;
        }
      }
    }
    if (inside) interior.push_back(i);
  }
  const int64_t m = int64_t(interior.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = 2.0 * A;
  for (int64_t r = 0; r < m; ++r) {
    K.block(n + r, 0, 1, n) = A.row(interior[r]);
    K.block(0, n + r, n, 1) = A.row(interior[r]).transpose();
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.head(n) = c;
  Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
  Eigen::VectorXd u = sol.head(n);
  res.ok = true;
  res.objective = (u.dot(A * u) - c.dot(u)) / double(cl.size());
  res.u.assign(u.data(), u.data() + n);
  return res;
}

}  // namespace

TEST_CASE("solve options validate their ranges") {
  CHECK_NOTHROW(SolveOptions{}.validate());
  SolveOptions bad;
  bad.tol = 1e-3;
  CHECK_THROWS(bad.validate());
  bad.tol = 0.0;
  CHECK_THROWS(bad.validate());
  CHECK(SolveOptions{}.iteration_cap(100) == 200);
  CHECK(parse_preconditioner("none") == Preconditioner::kNone);
  CHECK(parse_preconditioner(preconditioner_name(Preconditioner::kDiagonal)) ==
        Preconditioner::kDiagonal);
  CHECK_THROWS(parse_preconditioner("ssor"));
}

TEST_CASE("cluster operator matches the naive assembly") {
  auto env = sample_environment({LawKind::kTwoPoint, 0.6, 0.25}, Window{2, 2}, 31, 0);
  std::vector<int64_t> set;
  for (int64_t i = 0; i < env.window.vertex_count(); ++i) {
    if (i % 4 != 1) set.push_back(i);
  }
  ClusterOperator A(env, set);
  Eigen::MatrixXd D = naive_matrix(env, set);
  const int64_t n = A.size();
  REQUIRE(n == D.rows());

  auto u = testutil::ragged_values(set.size(), 1);
  auto v = testutil::ragged_values(set.size(), 2);
  Eigen::Map<const Eigen::VectorXd> ue(u.data(), n), ve(v.data(), n);
  std::vector<double> Au;
  A.apply(u, Au);
  Eigen::VectorXd Du = D * ue;
  for (int64_t i = 0; i < n; ++i) CHECK(Au[size_t(i)] == doctest::Approx(Du(i)));
  CHECK(A.quadratic_form(u) == doctest::Approx(ue.dot(D * ue)));
  // Symmetry and the zero row sum.
  std::vector<double> Av;
  A.apply(v, Av);
  double uAv = 0.0, vAu = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    uAv += u[size_t(i)] * Av[size_t(i)];
    vAu += v[size_t(i)] * Au[size_t(i)];
  }
  CHECK(uAv == doctest::Approx(vAu));
  std::vector<double> ones(set.size(), 1.0), Aones;
  A.apply(ones, Aones);
  for (double s : Aones) CHECK(std::abs(s) < 1e-12);
  // Energy equals the weighted sum of squared increments.
  CHECK(A.quadratic_form(u) ==
        doctest::Approx(0.5 * dirichlet_inner(env, set, u, u)).epsilon(1e-12));
}

TEST_CASE("dirichlet solve is exact on affine data over the full lattice") {
  auto env = testutil::full_lattice(2, 2);
  auto set = all_indices(env.window);
  const int64_t h = env.window.halfwidth();
  std::vector<uint8_t> is_b(set.size(), 0);
  std::vector<double> g(set.size(), 0.0);
  for (size_t i = 0; i < set.size(); ++i) {
    const Vertex x = env.window.vertex_at(set[i]);
    const bool rim = std::abs(x[0]) == h || std::abs(x[1]) == h;
    if (rim) is_b[i] = 1;
    g[i] = 2.0 * x[0] - 3.0 * x[1];
  }
  std::vector<double> data(g);
  for (size_t i = 0; i < set.size(); ++i) {
    if (!is_b[i]) data[i] = 0.0;
  }
  DirichletInfo info;
  auto u = solve_dirichlet(env, set, is_b, data, SolveOptions{}, &info);
  CHECK(info.isolated_components == 0);
  CHECK(info.n_free == (9 - 2) * (9 - 2));
  for (size_t i = 0; i < set.size(); ++i) {
    CHECK(u[i] == doctest::Approx(g[i]).epsilon(1e-7));
  }
}

TEST_CASE("dirichlet solve obeys the maximum principle on random media") {
  auto env = sample_environment({LawKind::kUniformInterval, 1.0, 0.2}, Window{2, 2},
                                77, 0);
  auto set = all_indices(env.window);
  const int64_t h = env.window.halfwidth();
  std::vector<uint8_t> is_b(set.size(), 0);
  std::vector<double> g(set.size(), 0.0);
  double lo = 1e9, hi = -1e9;
  for (size_t i = 0; i < set.size(); ++i) {
    const Vertex x = env.window.vertex_at(set[i]);
    if (std::abs(x[0]) == h || std::abs(x[1]) == h) {
      is_b[i] = 1;
      g[i] = std::sin(double(x[0])) + 0.3 * double(x[1]);
      lo = std::min(lo, g[i]);
      hi = std::max(hi, g[i]);
    }
  }
  auto u = solve_dirichlet(env, set, is_b, g);
  for (double v : u) {
    CHECK(v >= lo - 1e-8);
    CHECK(v <= hi + 1e-8);
  }
}

TEST_CASE("components without boundary data are zeroed and reported") {
  auto env = testutil::full_lattice(2, 1);
  std::vector<int64_t> subset = {env.window.index(Vertex{-1, -1, 0}),
                                 env.window.index(Vertex{1, 1, 0})};
  std::vector<uint8_t> is_b = {1, 0};
  std::vector<double> g = {5.0, 0.0};
  DirichletInfo info;
  auto u = solve_dirichlet(env, subset, is_b, g, SolveOptions{}, &info);
  CHECK(info.isolated_components == 1);
  CHECK(u[0] == 5.0);
  CHECK(u[1] == 0.0);
}

TEST_CASE("non-convergence under a starved iteration cap throws") {
  auto env = testutil::full_lattice(2, 2);
  auto set = all_indices(env.window);
  const int64_t h = env.window.halfwidth();
  std::vector<uint8_t> is_b(set.size(), 0);
  std::vector<double> g(set.size(), 0.0);
  for (size_t i = 0; i < set.size(); ++i) {
    const Vertex x = env.window.vertex_at(set[i]);
    if (std::abs(x[0]) == h || std::abs(x[1]) == h) {
      is_b[i] = 1;
      g[i] = double((x[0] * 13 + x[1] * 7) % 5);
    }
  }
  SolveOptions starved;
  starved.max_iters = 1;
  CHECK_THROWS_AS(solve_dirichlet(env, set, is_b, g, starved), std::runtime_error);
}

TEST_CASE("nu matches the exact full lattice value") {
  for (int m : {2, 3}) {
    auto env = testutil::full_lattice(2, m);
    Partition P = partition_P(env);
    auto r = solve_nu(env, env.window.as_cube(), P, unit_direction(0));
    REQUIRE(!r.degenerate);
    const double expect = double(pow3(m) - 1) / double(pow3(m));
    CHECK(std::abs(r.objective - expect) < 1e-9);
    CHECK(std::abs(r.residual) < 1e-9);
  }
  // Three dimensional variant.
  auto env3 = testutil::full_lattice(3, 2);
  Partition P3 = partition_P(env3);
  auto r3 = solve_nu(env3, env3.window.as_cube(), P3, unit_direction(1));
  CHECK(std::abs(r3.objective - 8.0 / 9.0) < 1e-9);
}

TEST_CASE("nu is a quadratic form: scaling and parallelogram law") {
  auto env = sample_environment({LawKind::kBernoulliUnit, 0.7, 1.0}, Window{2, 2}, 5, 0);
  Partition P = partition_P(env);
  TriadicCube U = env.window.as_cube();
  const Direction p1{1.0, 0.0, 0.0}, p2{0.0, 1.0, 0.0};
  const Direction sum{1.0, 1.0, 0.0}, dif{1.0, -1.0, 0.0};
  const Direction dbl{2.0, 0.0, 0.0};
  auto n1 = solve_nu(env, U, P, p1);
  REQUIRE(!n1.degenerate);
  auto n2 = solve_nu(env, U, P, p2);
  auto ns = solve_nu(env, U, P, sum);
  auto nd = solve_nu(env, U, P, dif);
  auto n4 = solve_nu(env, U, P, dbl);
  CHECK(n4.objective == doctest::Approx(4.0 * n1.objective).epsilon(1e-8));
  CHECK(ns.objective + nd.objective ==
        doctest::Approx(2.0 * n1.objective + 2.0 * n2.objective).epsilon(1e-8));
  CHECK(n1.objective >= 0.0);
}

TEST_CASE("nu keeps the affine values on the free boundary") {
  auto env = sample_environment({LawKind::kBernoulliUnit, 0.75, 1.0}, Window{2, 2}, 8, 0);
  Partition P = partition_P(env);
  TriadicCube U = env.window.as_cube();
  auto r = solve_nu(env, U, P, Direction{0.5, -1.5, 0.0});
  REQUIRE(!r.degenerate);
  auto cl = cl_closure(P, cube_window_indices(env.window, U));
  const int64_t h = env.window.halfwidth();
  for (size_t i = 0; i < r.vertices.size(); ++i) {
    const Vertex x = env.window.vertex_at(r.vertices[i]);
    bool rim = false;
    for (int a = 0; a < 2; ++a) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        Vertex y = x;
        y[a] += sgn;
        if (y[a] < -h || y[a] > h ||
            !std::binary_search(cl.begin(), cl.end(), env.window.index(y))) {
          rim = true;
        }
      }
    }
    if (rim) {
      CHECK(r.values[i] == doctest::Approx(0.5 * x[0] - 1.5 * x[1]).epsilon(1e-12));
    }
  }
}

TEST_CASE("mu agrees with the dense KKT oracle and its own dense path") {
  int tested = 0;
  for (uint64_t seed = 1; seed <= 12 && tested < 6; ++seed) {
    auto env = sample_environment({LawKind::kBernoulliUnit, 0.7, 1.0}, Window{2, 2},
                                  seed, 0);
    Partition P = partition_P(env);
    TriadicCube U = env.window.as_cube();
    const Direction q{1.0, 0.5, 0.0};
    auto oracle = kkt_oracle(env, U, P, q);
    if (!oracle.ok) continue;
    auto lib = minimize_mu(env, U, P, q);
    if (lib.degenerate) continue;
    ++tested;
    CHECK(lib.objective ==
          doctest::Approx(oracle.objective).epsilon(1e-8));
    auto dense = minimize_mu_dense(env, U, P, q);
    REQUIRE(!dense.degenerate);
    CHECK(dense.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
    CHECK(lib.objective <= 1e-12);
    CHECK(lib.residual <= 1e-8 * std::max(1.0, std::abs(lib.objective)));
    // Values agree up to an additive constant.
    double shift = lib.values[0] - oracle.u[0];
    double worst = 0.0;
    for (size_t i = 0; i < lib.values.size(); ++i) {
      worst = std::max(worst, std::abs(lib.values[i] - oracle.u[i] - shift));
    }
    CHECK(worst < 1e-6);
  }
  CHECK(tested >= 3);
}

TEST_CASE("the coarse flux load matches basis probing") {
  auto env = sample_environment({LawKind::kBernoulliUnit, 0.7, 1.0}, Window{2, 2}, 3, 0);
  Partition P = partition_P(env);
  TriadicCube U = env.window.as_cube();
  auto U_idx = cube_window_indices(env.window, U);
  auto cl = cl_closure(P, U_idx);
  auto cstar = cluster_C_star_union(env, P, U_idx);
  REQUIRE(!cstar.empty());
  Eigen::VectorXd probe = probed_load(env, P, cl, cstar, Direction{2.0, -1.0, 0.0});
  Coarsener co(env, P);
  Eigen::VectorXd assembled = Eigen::VectorXd::Zero(probe.size());
  for (const auto& [ord, w] : coarse_flux_weights(P, cl, Direction{2.0, -1.0, 0.0})) {
    auto ai = co.anchor_index(ord);
    REQUIRE(ai.has_value());
    auto it = std::lower_bound(cstar.begin(), cstar.end(), *ai);
    REQUIRE(it != cstar.end());
    assembled(it - cstar.begin()) += w;
  }
  for (int64_t i = 0; i < probe.size(); ++i) {
    CHECK(assembled(i) == doctest::Approx(probe(i)).epsilon(1e-10));
  }
}

TEST_CASE("mu coarsening is normalized to zero mean over the closure") {
  auto env = sample_environment({LawKind::kBernoulliUnit, 0.75, 1.0}, Window{2, 2}, 4, 0);
  Partition P = partition_P(env);
  TriadicCube U = env.window.as_cube();
  auto r = minimize_mu(env, U, P, Direction{1.0, 0.0, 0.0});
  REQUIRE(!r.degenerate);
  auto cl = cl_closure(P, cube_window_indices(env.window, U));
  Coarsener co(env, P);
  CoarseFunction f = coarsen(co, cl, r.vertices, r.values);
  double mean = 0.0;
  for (double v : f.value) mean += v;
  mean /= double(f.value.size());
  CHECK(std::abs(mean) < 1e-9);
}

TEST_CASE("duality defect equals the energy of the difference") {
  for (uint64_t seed : {6u, 10u}) {
    auto env = sample_environment({LawKind::kBernoulliUnit, 0.7, 1.0}, Window{2, 2},
                                  seed, 0);
    Partition P = partition_P(env);
    TriadicCube U = env.window.as_cube();
    const Direction p{1.0, 0.0, 0.0};
    auto nu = solve_nu(env, U, P, p);
    auto mu = minimize_mu(env, U, P, p);
    if (nu.degenerate || mu.degenerate) continue;
    REQUIRE(nu.vertices == mu.vertices);
    auto cl = cl_closure(P, cube_window_indices(env.window, U));
    Coarsener co(env, P);
    CoarseFunction cv = coarsen(co, cl, nu.vertices, nu.values);
    const double pairing =
        geometric_inner(env.window, cl, p, cv.value) / double(cl.size());
    std::vector<double> diff(nu.values.size());
    for (size_t i = 0; i < diff.size(); ++i) diff[i] = nu.values[i] - mu.values[i];
    ClusterOperator A(env, nu.vertices);
    const double rhs = A.quadratic_form(diff) / double(cl.size());
    const double lhs = nu.objective - mu.objective - pairing;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    CHECK(lhs >= -1e-10);
  }
}

TEST_CASE("cubes inside a single element are flagged degenerate") {
  auto env = testutil::full_lattice(2, 2);
  Partition P = partition_P(env);
  TriadicCube tiny = cube_of(Vertex{1, 1, 0}, 0, 2);
  auto mu = minimize_mu(env, tiny, P, unit_direction(0));
  CHECK(mu.degenerate);
  CHECK(mu.objective == 0.0);
  CHECK(!mu.note.empty());
  auto nu = solve_nu(env, tiny, P, unit_direction(0));
  CHECK(nu.degenerate);
}

TEST_CASE("solvers are bit-reproducible") {
  auto env = sample_environment({LawKind::kBernoulliUnit, 0.7, 1.0}, Window{2, 2}, 13, 0);
  Partition P = partition_P(env);
  TriadicCube U = env.window.as_cube();
  auto a = minimize_mu(env, U, P, Direction{1.0, 2.0, 0.0});
  auto b = minimize_mu(env, U, P, Direction{1.0, 2.0, 0.0});
  CHECK(a.degenerate == b.degenerate);
  CHECK(a.objective == b.objective);
  CHECK(a.values == b.values);
  auto c = solve_nu(env, U, P, Direction{1.0, 2.0, 0.0});
  auto d = solve_nu(env, U, P, Direction{1.0, 2.0, 0.0});
  CHECK(c.objective == d.objective);
  CHECK(c.values == d.values);
}
