#include "perchomog/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "perchomog/coarsen.hpp"
#include "perchomog/cluster.hpp"

namespace perchomog {
namespace {

int64_t find_position(const std::vector<int64_t>& sorted, int64_t key) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), key);
  if (it == sorted.end() || *it != key) return -1;
  return it - sorted.begin();
}

void check_sorted_unique(const std::vector<int64_t>& v) {
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] <= v[i - 1]) throw std::invalid_argument("vertex set must be sorted and unique");
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CgResult conjugate_gradient(const ClusterOperator& A, const std::vector<uint8_t>& free_mask,
                            const std::vector<double>& b, std::vector<double>& x,
                            const SolveOptions& opts) {
  const int64_t n = A.size();
  int64_t n_free = 0;
  for (int64_t i = 0; i < n; ++i) n_free += free_mask[i] ? 1 : 0;

  CgResult out;
  double b_norm = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    if (free_mask[i]) b_norm += b[i] * b[i];
  }
  b_norm = std::sqrt(b_norm);
  if (b_norm == 0.0 || n_free == 0) return out;

  std::vector<double> r(n, 0.0), z(n, 0.0), p(n, 0.0), ap(n);
  // x starts at zero on the free rows, so r = b there.
  for (int64_t i = 0; i < n; ++i) {
    if (free_mask[i]) r[i] = b[i];
  }
  auto precondition = [&](const std::vector<double>& rin, std::vector<double>& zout) {
    const std::vector<double>& d = A.diag();
    for (int64_t i = 0; i < n; ++i) {
      if (!free_mask[i]) {
        zout[i] = 0.0;
      } else if (opts.precond == Preconditioner::kDiagonal && d[i] > 0.0) {
        zout[i] = rin[i] / d[i];
      } else {
        zout[i] = rin[i];
      }
    }
  };
  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  const int64_t cap = opts.iteration_cap(n_free);
  double r_norm = b_norm;

  for (int64_t it = 0; it < cap; ++it) {
    A.apply(p, ap);
    for (int64_t i = 0; i < n; ++i) {
      if (!free_mask[i]) ap[i] = 0.0;
    }
    const double pap = dot(p, ap);
    if (pap <= 0.0) break;  // numerical breakdown; report the residual we have
    const double alpha = rz / pap;
    r_norm = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      if (!free_mask[i]) continue;
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      r_norm += r[i] * r[i];
    }
    r_norm = std::sqrt(r_norm);
    out.iterations = it + 1;
    if (r_norm <= opts.tol * b_norm) break;
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int64_t i = 0; i < n; ++i) {
      if (free_mask[i]) p[i] = z[i] + beta * p[i];
    }
  }
  out.relative_residual = r_norm / b_norm;
  if (out.relative_residual > opts.tol) {
    throw std::runtime_error("conjugate gradient did not converge: relative residual " +
                             std::to_string(out.relative_residual) + " after " +
                             std::to_string(out.iterations) + " iterations");
  }
  return out;
}

std::vector<double> minimize_loaded(const ClusterOperator& A,
                                    const std::vector<uint8_t>& loaded_rows,
                                    const std::vector<double>& c,
                                    const SolveOptions& opts, CgResult* info) {
  const int64_t n = A.size();
  std::vector<uint8_t> interior_mask(n);
  for (int64_t i = 0; i < n; ++i) interior_mask[i] = loaded_rows[i] ? 0 : 1;

  // Stage one: harmonic correction for the interior part of the load.
  std::vector<double> ci(n, 0.0);
  bool have_interior_load = false;
  for (int64_t i = 0; i < n; ++i) {
    if (interior_mask[i] && c[i] != 0.0) {
      ci[i] = c[i];
      have_interior_load = true;
    }
  }
  std::vector<double> y(n, 0.0);
  int64_t iterations = 0;
  if (have_interior_load) {
    const CgResult cg1 = conjugate_gradient(A, interior_mask, ci, y, opts);
    iterations += cg1.iterations;
  }

  // Whole-graph right side: zero in the interior, reduced load on the marked
  // rows, halved because the quadratic form counts each edge once.
  std::vector<double> ay(n);
  A.apply(y, ay);
  std::vector<double> t(n, 0.0);
  double t_sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    if (loaded_rows[i]) t[i] = 0.5 * (c[i] - ay[i]);
    t_sum += t[i];
  }
  // The exact right side sums to zero; remove rounding drift so the singular
  // system stays consistent.
  const double t_mean = n > 0 ? t_sum / double(n) : 0.0;
  for (double& v : t) v -= t_mean;

  std::vector<uint8_t> all_mask(n, 1);
  std::vector<double> u(n, 0.0);
  const CgResult cg2 = conjugate_gradient(A, all_mask, t, u, opts);
  iterations += cg2.iterations;
  if (info) {
    info->iterations = iterations;
    info->relative_residual = cg2.relative_residual;
  }
  return u;
}

namespace {

std::vector<int32_t> used_ordinals(const Partition& P, const std::vector<int64_t>& set) {
  std::vector<int32_t> ords;
  for (int64_t wi : set) ords.push_back(P.element_of[wi]);
  std::sort(ords.begin(), ords.end());
  ords.erase(std::unique(ords.begin(), ords.end()), ords.end());
  return ords;
}

// Everything shared between the iterative and dense cell-problem paths.
struct CellSetup {
  bool degenerate = false;
  std::string note;
  std::vector<int64_t> cl;
  std::vector<int64_t> cstar;
  std::vector<uint8_t> free_boundary;  // per cstar position: on the outer boundary of cl
  int64_t n_free = 0;
};

CellSetup prepare_cell(const Environment& env, const TriadicCube& U, const Partition& P) {
  CellSetup s;
  const TriadicCube& elem = P.element_at(U.center);
  if (elem.level > U.level) {
    s.degenerate = true;
    s.note = "cube lies inside a single partition element";
    return s;
  }
  s.cl = cl_closure(P, U);
  s.cstar = cluster_C_star_union(env, P, cube_window_indices(env.window, U));
  if (s.cstar.empty()) {
    s.degenerate = true;
    s.note = "no crossing cluster";
    return s;
  }
  const Window& w = env.window;
  const int64_t h = w.halfwidth();
  s.free_boundary.assign(s.cstar.size(), 0);
  for (size_t i = 0; i < s.cstar.size(); ++i) {
    const Vertex x = w.vertex_at(s.cstar[i]);
    bool boundary = false;
    for (int a = 0; a < w.dim && !boundary; ++a) {
      for (int sgn = -1; sgn <= 1 && !boundary; sgn += 2) {
        Vertex y = x;
        y[a] += sgn;
        if (y[a] < -h || y[a] > h || find_position(s.cl, w.index(y)) < 0) boundary = true;
      }
    }
    if (boundary) {
      s.free_boundary[i] = 1;
      ++s.n_free;
    }
  }
  return s;
}

// Load vector of the coarse flux functional on the cluster; empty on failure.
bool flux_load_vector(const Environment& env, const Partition& P, const CellSetup& s,
                      const Direction& q, Coarsener& coarsener, std::vector<double>& c,
                      std::string& note) {
  c.assign(s.cstar.size(), 0.0);
  for (const auto& [ord, weight] : coarse_flux_weights(P, s.cl, q)) {
    std::optional<int64_t> ai = coarsener.anchor_index(ord);
    if (!ai) {
      note = "element without anchor";
      return false;
    }
    const int64_t pos = find_position(s.cstar, *ai);
    if (pos < 0) {
      note = "anchor outside crossing cluster";
      return false;
    }
    c[pos] += weight;
  }
  return true;
}

// Shift making the coarsening of u average to zero over the closure.
bool coarse_mean_shift(const Partition& P, const CellSetup& s, Coarsener& coarsener,
                       const std::vector<double>& u, double& shift) {
  std::unordered_map<int32_t, int64_t> count;
  for (int64_t wi : s.cl) ++count[P.element_of[wi]];
  double total = 0.0;
  for (const auto& [ord, n] : count) {
    std::optional<int64_t> ai = coarsener.anchor_index(ord);
    if (!ai) return false;
    const int64_t pos = find_position(s.cstar, *ai);
    if (pos < 0) return false;
    total += double(n) * u[pos];
  }
  shift = total / double(s.cl.size());
  return true;
}

VariationalResult degenerate_result(const std::string& note) {
  VariationalResult r;
  r.degenerate = true;
  r.note = note;
  return r;
}

void finish_mu_result(const Environment& env, const Partition& P, const CellSetup& s,
                      const ClusterOperator& A, const std::vector<double>& c,
                      Coarsener& coarsener, std::vector<double> u, int64_t iterations,
                      VariationalResult& r) {
  double shift = 0.0;
  if (!coarse_mean_shift(P, s, coarsener, u, shift)) {
    r = degenerate_result("element without anchor");
    return;
  }
  for (double& v : u) v -= shift;
  const double quad = A.quadratic_form(u);
  const double load = dot(c, u);
  const double scale = double(s.cl.size());
  r.vertices = s.cstar;
  r.values = std::move(u);
  r.objective = (quad - load) / scale;
  r.cross_check = -quad / scale;
  r.residual = std::abs(r.objective - r.cross_check);
  r.iterations = iterations;
  r.normalization_shift = shift;
  (void)env;
}

}  // namespace

const char* preconditioner_name(Preconditioner p) {
  switch (p) {
    case Preconditioner::kNone: return "none";
    case Preconditioner::kDiagonal: return "diag";
  }
  return "diag";
}

Preconditioner parse_preconditioner(const std::string& name) {
  if (name == "none") return Preconditioner::kNone;
  if (name == "diag" || name == "diagonal") return Preconditioner::kDiagonal;
  throw std::invalid_argument("unknown preconditioner: " + name);
}

void SolveOptions::validate() const {
  if (!(tol > 0.0) || tol > 1e-4) throw std::invalid_argument("tol must lie in (0, 1e-4]");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
}

int64_t SolveOptions::iteration_cap(int64_t n_free) const {
  if (max_iters > 0) return max_iters;
  return int64_t(std::ceil(20.0 * std::sqrt(double(std::max<int64_t>(n_free, 1)))));
}

ClusterOperator::ClusterOperator(const Environment& env, const std::vector<int64_t>& vertices)
    : vertices_(vertices) {
  check_sorted_unique(vertices_);
  const Window& w = env.window;
  const int64_t h = w.halfwidth();
  const int64_t n = int64_t(vertices_.size());
  diag_.assign(n, 0.0);
  row_ptr_.assign(n + 1, 0);
  for (int64_t i = 0; i < n; ++i) {
    const Vertex x = w.vertex_at(vertices_[i]);
    for (int a = 0; a < w.dim; ++a) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        Vertex y = x;
        y[a] += sgn;
        if (y[a] < -h || y[a] > h) continue;
        const int64_t j = find_position(vertices_, w.index(y));
        if (j < 0) continue;
        const double a_e = sgn > 0 ? env.a(x, a) : env.a(y, a);
        if (a_e <= 0.0) continue;
        diag_[i] += a_e;
        col_.push_back(j);
        off_value_.push_back(-a_e);
        ++row_ptr_[i + 1];
      }
    }
  }
  for (int64_t i = 0; i < n; ++i) row_ptr_[i + 1] += row_ptr_[i];
}

void ClusterOperator::apply(const std::vector<double>& x, std::vector<double>& out) const {
  const int64_t n = size();
  if (int64_t(x.size()) != n) throw std::invalid_argument("value size mismatch");
  out.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    double s = diag_[i] * x[i];
    for (int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      s += off_value_[k] * x[col_[k]];
    }
    out[i] = s;
  }
}

double ClusterOperator::quadratic_form(const std::vector<double>& x) const {
  const int64_t n = size();
  if (int64_t(x.size()) != n) throw std::invalid_argument("value size mismatch");
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double row = diag_[i] * x[i];
    for (int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      row += off_value_[k] * x[col_[k]];
    }
    s += x[i] * row;
  }
  return s;
}

std::vector<double> solve_dirichlet(const Environment& env,
                                    const std::vector<int64_t>& vertices,
                                    const std::vector<uint8_t>& is_dirichlet,
                                    const std::vector<double>& values,
                                    const SolveOptions& opts, DirichletInfo* info) {
  opts.validate();
  if (is_dirichlet.size() != vertices.size() || values.size() != vertices.size()) {
    throw std::invalid_argument("value size mismatch");
  }
  const ClusterOperator A(env, vertices);
  const int64_t n = A.size();

  // Components of the open-edge graph; those without Dirichlet data are zeroed.
  std::vector<int32_t> comp(n, -1);
  int32_t n_comp = 0;
  std::vector<int64_t> stack;
  for (int64_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = n_comp;
    stack.push_back(s);
    while (!stack.empty()) {
      const int64_t i = stack.back();
      stack.pop_back();
      for (int64_t k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) {
        const int64_t j = A.col()[k];
        if (comp[j] < 0) {
          comp[j] = n_comp;
          stack.push_back(j);
        }
      }
    }
    ++n_comp;
  }
  std::vector<uint8_t> comp_has_data(n_comp, 0);
  for (int64_t i = 0; i < n; ++i) {
    if (is_dirichlet[i]) comp_has_data[comp[i]] = 1;
  }
  int64_t isolated = 0;
  for (int32_t cidx = 0; cidx < n_comp; ++cidx) {
    if (!comp_has_data[cidx]) ++isolated;
  }

  std::vector<uint8_t> free_mask(n, 0);
  std::vector<double> x(n, 0.0);
  int64_t n_free = 0;
  for (int64_t i = 0; i < n; ++i) {
    if (is_dirichlet[i]) {
      x[i] = values[i];
    } else if (comp_has_data[comp[i]]) {
      free_mask[i] = 1;
      ++n_free;
    }
  }

  // Right side on the free rows from the fixed boundary values.
  std::vector<double> ax(n);
  A.apply(x, ax);
  std::vector<double> b(n, 0.0);
  for (int64_t i = 0; i < n; ++i) {
    if (free_mask[i]) b[i] = -ax[i];
  }
  std::vector<double> correction(n, 0.0);
  const CgResult cg = conjugate_gradient(A, free_mask, b, correction, opts);
  for (int64_t i = 0; i < n; ++i) x[i] += correction[i];

  if (info) {
    info->iterations = cg.iterations;
    info->relative_residual = cg.relative_residual;
    info->isolated_components = isolated;
    info->n_free = n_free;
  }
  return x;
}

VariationalResult minimize_mu(const Environment& env, const TriadicCube& U,
                              const Partition& P, const Direction& q,
                              const SolveOptions& opts) {
  opts.validate();
  const CellSetup s = prepare_cell(env, U, P);
  if (s.degenerate) return degenerate_result(s.note);
  Coarsener coarsener(env, P);
  std::vector<double> c;
  std::string note;
  if (!flux_load_vector(env, P, s, q, coarsener, c, note)) return degenerate_result(note);

  const ClusterOperator A(env, s.cstar);
  CgResult cg;
  std::vector<double> u = minimize_loaded(A, s.free_boundary, c, opts, &cg);

  VariationalResult r;
  finish_mu_result(env, P, s, A, c, coarsener, std::move(u), cg.iterations, r);
  return r;
}

VariationalResult minimize_mu_dense(const Environment& env, const TriadicCube& U,
                                    const Partition& P, const Direction& q,
                                    int64_t dense_limit) {
  const CellSetup s = prepare_cell(env, U, P);
  if (s.degenerate) return degenerate_result(s.note);
  if (int64_t(s.cstar.size()) > dense_limit) {
    throw std::invalid_argument("cluster too large for the dense path");
  }
  Coarsener coarsener(env, P);
  std::vector<double> c;
  std::string note;
  if (!flux_load_vector(env, P, s, q, coarsener, c, note)) return degenerate_result(note);

  const ClusterOperator A(env, s.cstar);
  const int64_t n = A.size();
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  for (int64_t i = 0; i < n; ++i) {
    dense(i, i) = A.diag()[i];
    for (int64_t k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) {
      dense(i, A.col()[k]) += A.off_value()[k];
    }
  }
  std::vector<int64_t> fidx, iidx;
  for (int64_t i = 0; i < n; ++i) {
    (s.free_boundary[i] ? fidx : iidx).push_back(i);
  }
  const int64_t nf = int64_t(fidx.size());
  const int64_t ni = int64_t(iidx.size());
  Eigen::MatrixXd aff(nf, nf), afi(nf, ni), aii(ni, ni);
  Eigen::VectorXd cf(nf), ci(ni);
  for (int64_t r1 = 0; r1 < nf; ++r1) {
    cf(r1) = c[fidx[r1]];
    for (int64_t c1 = 0; c1 < nf; ++c1) aff(r1, c1) = dense(fidx[r1], fidx[c1]);
    for (int64_t c1 = 0; c1 < ni; ++c1) afi(r1, c1) = dense(fidx[r1], iidx[c1]);
  }
  for (int64_t r1 = 0; r1 < ni; ++r1) {
    ci(r1) = c[iidx[r1]];
    for (int64_t c1 = 0; c1 < ni; ++c1) aii(r1, c1) = dense(iidx[r1], iidx[c1]);
  }

  Eigen::VectorXd g;
  Eigen::VectorXd ui;
  if (ni > 0) {
    Eigen::LDLT<Eigen::MatrixXd> aii_ldlt(aii);
    const Eigen::VectorXd y = aii_ldlt.solve(ci);
    const Eigen::VectorXd b = cf - afi * y;
    const Eigen::MatrixXd schur = aff - afi * aii_ldlt.solve(afi.transpose());
    g = schur.completeOrthogonalDecomposition().solve(0.5 * b);
    ui = aii_ldlt.solve(-afi.transpose() * g);
  } else {
    g = dense.completeOrthogonalDecomposition().solve(0.5 * Eigen::Map<Eigen::VectorXd>(
            c.data(), n));
    ui.resize(0);
  }

  std::vector<double> u(n, 0.0);
  for (int64_t i = 0; i < nf; ++i) u[fidx[i]] = g(i);
  for (int64_t i = 0; i < ni; ++i) u[iidx[i]] = ui(i);

  VariationalResult r;
  finish_mu_result(env, P, s, A, c, coarsener, std::move(u), 0, r);
  return r;
}

VariationalResult solve_nu(const Environment& env, const TriadicCube& U,
                           const Partition& P, const Direction& p,
                           const SolveOptions& opts) {
  opts.validate();
  const CellSetup s = prepare_cell(env, U, P);
  if (s.degenerate) return degenerate_result(s.note);

  const Window& w = env.window;
  std::vector<double> g(s.cstar.size(), 0.0);
  for (size_t i = 0; i < s.cstar.size(); ++i) {
    if (!s.free_boundary[i]) continue;
    const Vertex x = w.vertex_at(s.cstar[i]);
    for (int a = 0; a < w.dim; ++a) g[i] += p[a] * double(x[a]);
  }
  DirichletInfo info;
  std::vector<double> v =
      solve_dirichlet(env, s.cstar, s.free_boundary, g, opts, &info);

  const ClusterOperator A(env, s.cstar);
  const double quad = A.quadratic_form(v);
  const double flux = flux_inner(env, s.cstar, p, v);
  const double scale = double(s.cl.size());

  VariationalResult r;
  r.vertices = s.cstar;
  r.values = std::move(v);
  r.objective = quad / scale;
  r.cross_check = (-quad + flux) / scale;
  r.residual = std::abs(r.objective - r.cross_check);
  r.iterations = info.iterations;
  return r;
}

}  // namespace perchomog
