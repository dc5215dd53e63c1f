#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perchomog/environment.hpp"
#include "perchomog/fields.hpp"
#include "perchomog/lattice.hpp"
#include "perchomog/partition.hpp"

namespace perchomog {

enum class Preconditioner : int { kNone = 0, kDiagonal = 1 };

const char* preconditioner_name(Preconditioner p);
Preconditioner parse_preconditioner(const std::string& name);

struct SolveOptions {
  double tol = 1e-10;          // relative residual target, in (0, 1e-4]
  int64_t max_iters = 0;       // 0: ceil(20 sqrt(N_free))
  Preconditioner precond = Preconditioner::kDiagonal;

  void validate() const;
  int64_t iteration_cap(int64_t n_free) const;
};

// Symmetric positive semidefinite operator of the conductance network on a
// sorted vertex set: off-diagonal -a(e) on open in-set edges, row sums zero.
// quadratic_form(u) equals the Dirichlet energy sum over unordered open
// in-set edges of a(e) (du)^2.
class ClusterOperator {
 public:
  ClusterOperator(const Environment& env, const std::vector<int64_t>& vertices);

  int64_t size() const { return int64_t(diag_.size()); }
  const std::vector<int64_t>& vertices() const { return vertices_; }
  const std::vector<double>& diag() const { return diag_; }

  void apply(const std::vector<double>& x, std::vector<double>& out) const;
  double quadratic_form(const std::vector<double>& x) const;

  // CSR access for dense assembly and component walks.
  const std::vector<int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<int64_t>& col() const { return col_; }
  const std::vector<double>& off_value() const { return off_value_; }

 private:
  std::vector<int64_t> vertices_;
  std::vector<double> diag_;
  std::vector<int64_t> row_ptr_;
  std::vector<int64_t> col_;
  std::vector<double> off_value_;  // -a(e), symmetric
};

struct DirichletInfo {
  int64_t iterations = 0;
  double relative_residual = 0.0;
  int64_t isolated_components = 0;  // components without boundary data, zeroed
  int64_t n_free = 0;
};

struct CgResult {
  int64_t iterations = 0;
  double relative_residual = 0.0;
};

// Preconditioned conjugate gradient for A x = b restricted to the masked
// rows; x keeps its input values (normally zero) outside the mask. Works for
// the positive semidefinite whole-graph system as long as b is consistent.
// Throws on non-convergence.
CgResult conjugate_gradient(const ClusterOperator& A, const std::vector<uint8_t>& free_mask,
                            const std::vector<double>& b, std::vector<double>& x,
                            const SolveOptions& opts = SolveOptions{});

// Minimizer of u.Au - c.u over functions that are A-harmonic off the marked
// rows (the variational class of the cell problems): a harmonic correction
// carries the interior part of the load, the marked rows receive the halved
// reduced load. The additive constant is not fixed here.
std::vector<double> minimize_loaded(const ClusterOperator& A,
                                    const std::vector<uint8_t>& loaded_rows,
                                    const std::vector<double>& c,
                                    const SolveOptions& opts, CgResult* info = nullptr);

// Harmonic extension of boundary data over open edges within `vertices`
// (sorted window indices). Vertices with is_dirichlet != 0 keep values[i];
// connected components of the open-edge graph that contain no Dirichlet
// vertex are set to zero and counted in info. Throws on non-convergence.
std::vector<double> solve_dirichlet(const Environment& env,
                                    const std::vector<int64_t>& vertices,
                                    const std::vector<uint8_t>& is_dirichlet,
                                    const std::vector<double>& values,
                                    const SolveOptions& opts = SolveOptions{},
                                    DirichletInfo* info = nullptr);

struct VariationalResult {
  std::vector<int64_t> vertices;  // sorted window indices carrying the minimizer
  std::vector<double> values;
  double objective = 0.0;    // optimal value of the variational problem
  double cross_check = 0.0;  // same quantity from the alternative formula
  double residual = 0.0;     // |objective - cross_check|
  int64_t iterations = 0;
  double normalization_shift = 0.0;  // subtracted so the coarsening has mean 0
  bool degenerate = false;  // no admissible competitor; objective fixed at 0
  std::string note;
};

// Minimal value over functions u on the cluster of U, harmonic off the
// boundary, of (1/|cl(U)|) (1/2 <grad u, a grad u> - <q, grad [u]>): always
// <= 0, equal to -(1/(2|cl(U)|)) <grad u, a grad u> at the optimum.
VariationalResult minimize_mu(const Environment& env, const TriadicCube& U,
                              const Partition& P, const Direction& q,
                              const SolveOptions& opts = SolveOptions{});

// Dense reference path (Schur complement + LDLT). Requires the cluster to
// have at most `dense_limit` vertices.
VariationalResult minimize_mu_dense(const Environment& env, const TriadicCube& U,
                                    const Partition& P, const Direction& q,
                                    int64_t dense_limit = 4096);

// Maximal value over the same class of (1/|cl(U)|) (-1/2 <grad v, a grad v>
// + <p, a grad v>): attained by the harmonic extension of x -> p.x from the
// free boundary, equals (1/(2|cl(U)|)) <grad v, a grad v> at the optimum.
VariationalResult solve_nu(const Environment& env, const TriadicCube& U,
                           const Partition& P, const Direction& p,
                           const SolveOptions& opts = SolveOptions{});

}  // namespace perchomog
