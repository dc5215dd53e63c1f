#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perchomog/environment.hpp"
#include "perchomog/fields.hpp"
#include "perchomog/goodness.hpp"
#include "perchomog/lattice.hpp"
#include "perchomog/partition.hpp"
#include "perchomog/solver.hpp"
#include "perchomog/stats.hpp"

namespace perchomog {

// Dense symmetric matrix in at most three dimensions; the carrier for the
// per-scale quadratic forms of the cell energies.
struct SymMatrix {
  int dim = 2;
  std::array<std::array<double, 3>, 3> m{};

  static SymMatrix identity(int dim, double scale = 1.0);

  double operator()(int i, int j) const { return m[i][j]; }
  double& at(int i, int j) { return m[i][j]; }

  double quad(const Direction& q) const;        // q . M q
  Direction apply(const Direction& q) const;    // M q
  SymMatrix inverse() const;                    // throws when singular
  SymMatrix plus(const SymMatrix& o, double weight = 1.0) const;
  SymMatrix scaled(double s) const;
  double op_norm() const;                       // spectral norm
  double min_eigenvalue() const;
  double max_eigenvalue() const;
};

// Matrix M of an exact quadratic form f(q) = 1/2 q.Mq recovered from its
// values on the spanning directions e_1..e_d, then e_i + e_j for i < j in
// lexicographic order (the order of spanning_directions).
SymMatrix form_matrix(int dim, const std::vector<double>& values_by_direction);

std::vector<Direction> spanning_directions(int dim);

// One cell-energy evaluation. Values use the ordered-pair convention
// throughout: on the full lattice the minimal energy is -(1 - 3^{-n})|q|^2,
// the maximal one (1 - 3^{-n})|p|^2, and the effective matrix tends to 2I.
struct EnergyRecord {
  int64_t env_index = 0;
  TriadicCube cube{};
  std::string kind;          // "mu" | "nu"
  Direction dir{0.0, 0.0, 0.0};
  double value = 0.0;        // 0 when degenerate
  double residual = 0.0;     // |objective - cross-check| of the solve
  int64_t iterations = 0;
  bool degenerate = false;
  std::string mode;          // goodness probe family: "exact", "strided", "default"
  std::string note;
};

struct EnsembleOptions {
  uint64_t master_seed = 0;
  int64_t n_envs = 1;
  int workers = 1;
  SolveOptions solve{};
  std::optional<TestMode> mode{};  // forced goodness probe family
};

// Level-n triadic subcubes of the central level-(window.level - 1) cube (the
// window's inner third), in center-lexicographic order. Requires n < level.
std::vector<TriadicCube> inner_third_subcubes(const Window& window, int n);

// Sweeps mu and nu over every inner-third subcube of the given level, every
// environment and every direction. Solver failures are recorded per cell
// (degenerate + note), never aborting the sweep. Record order is environment
// major, then cube, then direction, with the mu record before the nu record;
// the order never depends on the worker count.
std::vector<EnergyRecord> ensemble_energy(const ConductanceLaw& law, const Window& window,
                                          const EnsembleOptions& opts, int level,
                                          const std::vector<Direction>& directions);

// Mean quadratic-form matrices of one scale, plus the per-environment means
// that environment-level bootstrap resampling works on. Degenerate records
// enter as zeros and are counted.
struct ScaleForms {
  int level = 0;
  int dim = 2;
  int64_t n_envs = 0;
  SymMatrix neg_mu;   // matrix of q -> mean of -mu(cube_n, q)
  SymMatrix nu;       // matrix of p -> mean of nu(cube_n, p)
  std::vector<SymMatrix> neg_mu_per_env;
  std::vector<SymMatrix> nu_per_env;
  int64_t degenerate_records = 0;
};

ScaleForms collect_scale_forms(const std::vector<EnergyRecord>& records, int level, int dim);

// Both sides of the exact identity tying the two cell problems together on
// one cube: with u the minimizer for q, v the maximizer for p, and [v] the
// piecewise-anchor coarsening,
//   nu(U,p) - mu(U,q) - (1/|cl|) <q, grad [v]>  =  (1/(2|cl|)) <grad(v-u), a grad(v-u)>.
// boundary_flux_defect compares the coarse flux term against its limit 2 p.q
// (ordered-pair convention doubles the classical p.q).
struct DualityGapReport {
  double nu_value = 0.0;
  double mu_value = 0.0;
  double flux_term = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // |lhs - rhs| / max(1, |lhs|, |rhs|)
  double boundary_flux_defect = 0.0;
  bool degenerate = false;
  std::string note;
};

DualityGapReport duality_gap_check(const Environment& env, const TriadicCube& cube,
                                   const Partition& P, const Direction& p,
                                   const Direction& q,
                                   const SolveOptions& opts = SolveOptions{});

// Distribution of nu(parent) - average over the 3^d child cubes of nu, per
// environment (and the -mu analogue), with environment-level bootstrap CIs.
// The gates allow the calibrated boundary-effect slack: means may exceed 0
// by at most slack_* within the CI.
struct SubadditivityReport {
  int child_level = 0;
  Direction dir{0.0, 0.0, 0.0};
  int64_t pairs = 0;                  // (environment, parent) pairs entering
  std::vector<double> delta_nu;       // per environment mean
  std::vector<double> delta_neg_mu;
  double mean_delta_nu = 0.0;
  double mean_delta_neg_mu = 0.0;
  Interval ci_nu{}, ci_mu{};
  double slack_nu = 0.0, slack_mu = 0.0;
  bool pass_nu = false, pass_mu = false;
};

SubadditivityReport subadditivity_check(const std::vector<EnergyRecord>& records,
                                        int child_level, const Direction& dir,
                                        uint64_t master_seed);

// Per-scale effective matrices. The nu side reads the mean form directly:
// (1/2) p . abar_nu p = E[nu]. The -mu side determines the inverse matrix;
// with ordered-pair values the translation is abar_mu = 4 (mean form)^{-1},
// so that both sides bracket the limit from opposite directions. The
// headline abar is the nu-side value at the largest swept scale (no
// extrapolation); its finite-size error is a clean O(3^{-n}) boundary
// layer, whereas the mu side also carries the coarsened-flux deficit of the
// partition and converges noticeably slower. sigma_eff = abar / 2 is the
// classical effective conductivity. The mu-side form is singular whenever a
// scale has no flux to extract (any cube lying in one partition element has
// -mu identically zero, so size-3 sweeps never feed this side); such levels
// get mu_valid = false and a zero placeholder matrix, and the bracket
// diagnostics use the largest mu-valid level instead.
struct EffectiveMatrixEstimate {
  std::vector<int> levels;
  std::vector<SymMatrix> abar_nu;    // per level
  std::vector<SymMatrix> abar_mu;    // per level (zero placeholder if invalid)
  std::vector<uint8_t> mu_valid;     // per level
  SymMatrix abar;
  SymMatrix sigma_eff;
  std::array<std::array<Interval, 3>, 3> ci{};     // entries of abar (nu side, top scale)
  std::array<std::array<Interval, 3>, 3> ci_mu{};  // entries of abar_mu (top mu-valid scale)
  int64_t n_envs = 0;
  int mu_top_level = -1;     // largest mu-valid level, -1 if none
  bool unreliable = false;   // fewer than 8 environments
  double duality_gap = -1.0; // relative op-norm gap between the sides, -1 if no mu side
  bool sides_agree = false;  // gap below joint CI width + calibrated 3^{-n} floor
};

EffectiveMatrixEstimate abar_estimate(const std::vector<EnergyRecord>& records, int dim,
                                      uint64_t master_seed);

// Scale-by-scale defect series. All three quantities live in classical
// (half of ordered-pair) units so that the exact identity makes the series
// vanish at the homogenized matrix:
//   omega_n(e) = E nu_n(ac^{-1} e) - E mu_n(e) - e . ac^{-1} e,  ac = abar/2,
// evaluated exactly from the mean form matrices (no extra solves), together
// with the positive parts of the scale increments (tau) and a log-log decay
// fit of max_i |omega_n(e_i)|.
struct OmegaSeries {
  std::vector<int> levels;
  std::vector<std::vector<double>> omega;    // per level, per axis direction
  std::vector<double> omega_max;             // per level: max_i |omega(e_i)|
  std::vector<double> tau;                   // per consecutive level pair
  std::vector<double> mu_increment;          // min_i of E mu_{n+1} - E mu_n
  std::vector<double> nu_increment;          // min_i of E nu_n - E nu_{n+1}
  LineFit fit;                               // log omega_max against log 3^n
  double alpha_hat = 0.0;                    // -slope of the fit
};

OmegaSeries omega_decay(const std::vector<EnergyRecord>& records, int dim,
                        const SymMatrix& abar_hat);

// Partition of a cube built from its own edges only: cubes of size >= 3^n_loc
// count as good without being probed, smaller ones get the real verdict when
// their enlargement stays inside the cube and the rim default otherwise.
struct LocalizedPartition {
  TriadicCube cube{};
  int n_loc = 0;
  Partition partition;
  int64_t max_element = 1;
  bool coarseness_ok = false;  // every element of size <= 3^{n_loc - 1}
};

LocalizedPartition build_local_partition(const Environment& env, const TriadicCube& cube,
                                         int n_loc,
                                         std::optional<TestMode> forced_mode = std::nullopt);

// Localized cell energies: the same two variational problems, but built
// measurably from the cube's edges alone. The load of the mu problem runs
// over the trimmed box (boundary distance >= 3^n_loc), the active cluster is
// the cluster of the cube containing every element cluster met by the
// trimmed box, free rows are the cluster vertices on the cube's geometric
// boundary, and values normalize by the cube volume. When the localized
// partition reaches the cutoff scale the value is 0 by definition
// (coarseness_ok = false, not flagged degenerate).
struct LocalizedEnergyResult {
  TriadicCube cube{};
  int n_loc = 0;
  std::string kind;  // "mu" | "nu"
  Direction dir{0.0, 0.0, 0.0};
  bool coarseness_ok = false;
  int64_t max_element = 1;
  double value = 0.0;
  double cross_check = 0.0;
  double residual = 0.0;
  int64_t iterations = 0;
  bool degenerate = false;
  std::string note;
  std::vector<int64_t> vertices;  // active cluster, sorted window indices
  std::vector<double> values;     // optimizer on the active cluster
};

LocalizedEnergyResult localized_energy(const Environment& env, const TriadicCube& cube,
                                       int n_loc, const Direction& dir,
                                       const std::string& kind,
                                       const SolveOptions& opts = SolveOptions{},
                                       std::optional<TestMode> forced_mode = std::nullopt);

// Stretched-exponential tail summary of a nonnegative sample: survival
// S(t) ~ exp(-(t/theta)^s). Requires at least 50 samples; constant samples
// are flagged degenerate instead of fitted.
struct TailExponentFit {
  std::string name;
  double s = 0.0;
  double theta = 0.0;
  double r2 = 0.0;
  int points = 0;
  int64_t n_samples = 0;
  bool degenerate = false;
};

TailExponentFit tail_fit(const std::vector<double>& samples, const std::string& name);

// Per-environment minimal scale: the largest 3^m such that some cell
// z + cube_n (n = ceil(m/4), z on the 3^k grid of cube_m, k = ceil(m/8),
// clipped to the window) has normalized mu/nu deviation from the
// homogenized forms at least c_param * 3^{-m alpha}; 1 when no scale fails.
// Deviations are measured in classical units against abar/2 and its inverse.
struct MinimalScaleEstimate {
  double c_param = 0.0;
  double alpha = 0.0;
  std::vector<double> n_hat;          // per environment
  std::vector<double> worst_deviation;  // per environment, diagnostic
  TailFit tail;                       // over n_hat
  int64_t degenerate_cells = 0;
};

MinimalScaleEstimate minimal_scale_n(const ConductanceLaw& law, const Window& window,
                                     const EnsembleOptions& opts, const SymMatrix& abar,
                                     double c_param, double alpha);

}  // namespace perchomog
