#include "perchomog/energy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "perchomog/calibration.hpp"
#include "perchomog/cluster.hpp"
#include "perchomog/coarsen.hpp"
#include "perchomog/parallel.hpp"
#include "perchomog/rng.hpp"

namespace perchomog {
namespace {

int64_t find_position(const std::vector<int64_t>& sorted, int64_t key) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), key);
  if (it == sorted.end() || *it != key) return -1;
  return it - sorted.begin();
}

Eigen::Matrix3d to_eigen(const SymMatrix& s) {
  Eigen::Matrix3d e = Eigen::Matrix3d::Identity();
  for (int i = 0; i < s.dim; ++i) {
    for (int j = 0; j < s.dim; ++j) e(i, j) = s.m[i][j];
  }
  return e;
}

SymMatrix from_eigen(int dim, const Eigen::Matrix3d& e) {
  SymMatrix s;
  s.dim = dim;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) s.m[i][j] = e(i, j);
  }
  return s;
}

double norm_sq(const Direction& q, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += q[i] * q[i];
  return s;
}

}  // namespace

SymMatrix SymMatrix::identity(int dim, double scale) {
  SymMatrix s;
  s.dim = dim;
  for (int i = 0; i < dim; ++i) s.m[i][i] = scale;
  return s;
}

double SymMatrix::quad(const Direction& q) const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) s += q[i] * m[i][j] * q[j];
  }
  return s;
}

Direction SymMatrix::apply(const Direction& q) const {
  Direction out{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) out[i] += m[i][j] * q[j];
  }
  return out;
}

SymMatrix SymMatrix::inverse() const {
  Eigen::Matrix3d e = to_eigen(*this);
  Eigen::FullPivLU<Eigen::Matrix3d> lu(e);
  if (!lu.isInvertible()) throw std::runtime_error("matrix is singular");
  return from_eigen(dim, lu.inverse());
}

SymMatrix SymMatrix::plus(const SymMatrix& o, double weight) const {
  SymMatrix s = *this;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) s.m[i][j] += weight * o.m[i][j];
  }
  return s;
}

SymMatrix SymMatrix::scaled(double sc) const {
  SymMatrix s = *this;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) s.m[i][j] *= sc;
  }
  return s;
}

// Spectral quantities restrict to the leading dim x dim block; the 3x3
// embedding pads the unused axes with identity entries that must not leak
// into norms of difference matrices.
double SymMatrix::op_norm() const {
  Eigen::MatrixXd block = to_eigen(*this).topLeftCorner(dim, dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bs(block);
  return bs.eigenvalues().cwiseAbs().maxCoeff();
}

double SymMatrix::min_eigenvalue() const {
  Eigen::MatrixXd block = to_eigen(*this).topLeftCorner(dim, dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bs(block);
  return bs.eigenvalues().minCoeff();
}

double SymMatrix::max_eigenvalue() const {
  Eigen::MatrixXd block = to_eigen(*this).topLeftCorner(dim, dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bs(block);
  return bs.eigenvalues().maxCoeff();
}

std::vector<Direction> spanning_directions(int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension must be 1..3");
  std::vector<Direction> out;
  for (int i = 0; i < dim; ++i) out.push_back(unit_direction(i));
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      Direction d{0.0, 0.0, 0.0};
      d[i] = 1.0;
      d[j] = 1.0;
      out.push_back(d);
    }
  }
  return out;
}

SymMatrix form_matrix(int dim, const std::vector<double>& values_by_direction) {
  const size_t expected = size_t(dim + dim * (dim - 1) / 2);
  if (values_by_direction.size() != expected) {
    throw std::invalid_argument("form_matrix needs one value per spanning direction");
  }
  SymMatrix s;
  s.dim = dim;
  for (int i = 0; i < dim; ++i) s.m[i][i] = 2.0 * values_by_direction[size_t(i)];
  size_t k = size_t(dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j, ++k) {
      const double off =
          values_by_direction[k] - values_by_direction[size_t(i)] - values_by_direction[size_t(j)];
      s.m[i][j] = off;
      s.m[j][i] = off;
    }
  }
  return s;
}

std::vector<TriadicCube> inner_third_subcubes(const Window& window, int n) {
  const int m = window.level - 1;
  if (n < 0 || n > m) throw std::invalid_argument("subcube level must lie in [0, window level - 1]");
  const int64_t step = pow3(n);
  const int64_t kmax = (pow3(m - n) - 1) / 2;
  std::vector<TriadicCube> out;
  std::array<int64_t, 3> k{-kmax, -kmax, -kmax};
  for (int i = window.dim; i < 3; ++i) k[size_t(i)] = 0;
  while (true) {
    TriadicCube c;
    c.dim = window.dim;
    c.level = n;
    for (int i = 0; i < window.dim; ++i) c.center[size_t(i)] = int32_t(k[size_t(i)] * step);
    out.push_back(c);
    int i = window.dim - 1;
    while (i >= 0 && ++k[size_t(i)] > kmax) k[size_t(i--)] = -kmax;
    if (i < 0) break;
  }
  return out;
}

std::vector<EnergyRecord> ensemble_energy(const ConductanceLaw& law, const Window& window,
                                          const EnsembleOptions& opts, int level,
                                          const std::vector<Direction>& directions) {
  if (opts.n_envs < 1) throw std::invalid_argument("need at least one environment");
  if (!law.valid()) throw std::invalid_argument("invalid conductance law");
  opts.solve.validate();
  const std::vector<TriadicCube> cubes = inner_third_subcubes(window, level);
  const std::string mode = opts.mode ? test_mode_name(*opts.mode) : "default";

  auto per_env = [&](int64_t e) -> std::vector<EnergyRecord> {
    const Environment env = sample_environment(law, window, opts.master_seed, uint64_t(e));
    const Partition P = partition_P(env, opts.mode);
    std::vector<EnergyRecord> out;
    out.reserve(cubes.size() * directions.size() * 2);
    for (const TriadicCube& cube : cubes) {
      for (const Direction& dir : directions) {
        for (const char* kind : {"mu", "nu"}) {
          EnergyRecord r;
          r.env_index = e;
          r.cube = cube;
          r.kind = kind;
          r.dir = dir;
          r.mode = mode;
          try {
            const VariationalResult v = r.kind == "mu"
                                            ? minimize_mu(env, cube, P, dir, opts.solve)
                                            : solve_nu(env, cube, P, dir, opts.solve);
            r.value = v.degenerate ? 0.0 : v.objective;
            r.residual = v.residual;
            r.iterations = v.iterations;
            r.degenerate = v.degenerate;
            r.note = v.note;
          } catch (const std::exception& ex) {
            r.degenerate = true;
            r.value = 0.0;
            r.note = ex.what();
          }
          out.push_back(std::move(r));
        }
      }
    }
    return out;
  };

  const auto chunks =
      parallel_map<std::vector<EnergyRecord>>(opts.n_envs, opts.workers, per_env);
  std::vector<EnergyRecord> records;
  for (const auto& chunk : chunks) records.insert(records.end(), chunk.begin(), chunk.end());
  return records;
}

ScaleForms collect_scale_forms(const std::vector<EnergyRecord>& records, int level, int dim) {
  const std::vector<Direction> dirs = spanning_directions(dim);
  auto dir_index = [&](const Direction& d) -> int {
    for (size_t i = 0; i < dirs.size(); ++i) {
      if (dirs[i][0] == d[0] && dirs[i][1] == d[1] && dirs[i][2] == d[2]) return int(i);
    }
    return -1;
  };

  struct Acc {
    std::vector<double> mu_sum, nu_sum;
    std::vector<int64_t> mu_n, nu_n;
  };
  std::map<int64_t, Acc> by_env;
  int64_t degenerate = 0;
  for (const EnergyRecord& r : records) {
    if (r.cube.level != level) continue;
    const int di = dir_index(r.dir);
    if (di < 0) continue;
    Acc& a = by_env[r.env_index];
    if (a.mu_sum.empty()) {
      a.mu_sum.assign(dirs.size(), 0.0);
      a.nu_sum.assign(dirs.size(), 0.0);
      a.mu_n.assign(dirs.size(), 0);
      a.nu_n.assign(dirs.size(), 0);
    }
    if (r.degenerate) ++degenerate;
    if (r.kind == "mu") {
      a.mu_sum[size_t(di)] += -r.value;
      ++a.mu_n[size_t(di)];
    } else if (r.kind == "nu") {
      a.nu_sum[size_t(di)] += r.value;
      ++a.nu_n[size_t(di)];
    }
  }

  ScaleForms sf;
  sf.level = level;
  sf.dim = dim;
  sf.degenerate_records = degenerate;
  for (const auto& [env, a] : by_env) {
    std::vector<double> mu_mean(dirs.size()), nu_mean(dirs.size());
    bool complete = true;
    for (size_t i = 0; i < dirs.size(); ++i) {
      if (a.mu_n[i] == 0 || a.nu_n[i] == 0) {
        complete = false;
        break;
      }
      mu_mean[i] = a.mu_sum[i] / double(a.mu_n[i]);
      nu_mean[i] = a.nu_sum[i] / double(a.nu_n[i]);
    }
    if (!complete) continue;
    sf.neg_mu_per_env.push_back(form_matrix(dim, mu_mean));
    sf.nu_per_env.push_back(form_matrix(dim, nu_mean));
  }
  sf.n_envs = int64_t(sf.neg_mu_per_env.size());
  if (sf.n_envs == 0) throw std::invalid_argument("no complete records at the requested level");

  SymMatrix mu_acc = SymMatrix::identity(dim, 0.0);
  SymMatrix nu_acc = SymMatrix::identity(dim, 0.0);
  for (int64_t e = 0; e < sf.n_envs; ++e) {
    mu_acc = mu_acc.plus(sf.neg_mu_per_env[size_t(e)]);
    nu_acc = nu_acc.plus(sf.nu_per_env[size_t(e)]);
  }
  sf.neg_mu = mu_acc.scaled(1.0 / double(sf.n_envs));
  sf.nu = nu_acc.scaled(1.0 / double(sf.n_envs));
  return sf;
}

DualityGapReport duality_gap_check(const Environment& env, const TriadicCube& cube,
                                   const Partition& P, const Direction& p,
                                   const Direction& q, const SolveOptions& opts) {
  DualityGapReport rep;
  const VariationalResult u = minimize_mu(env, cube, P, q, opts);
  const VariationalResult v = solve_nu(env, cube, P, p, opts);
  if (u.degenerate || v.degenerate) {
    rep.degenerate = true;
    rep.note = u.degenerate ? u.note : v.note;
    return rep;
  }
  if (u.vertices != v.vertices) {
    rep.degenerate = true;
    rep.note = "cell cluster mismatch";
    return rep;
  }
  rep.mu_value = u.objective;
  rep.nu_value = v.objective;

  const std::vector<int64_t> cl = cl_closure(P, cube);
  const double cl_size = double(cl.size());
  Coarsener coarsener(env, P);
  CoarseFunction vbar;
  try {
    vbar = coarsen(coarsener, cl, v.vertices, v.values);
  } catch (const std::exception& ex) {
    rep.degenerate = true;
    rep.note = ex.what();
    return rep;
  }
  rep.flux_term = geometric_inner(env.window, vbar.domain, q, vbar.value) / cl_size;

  std::vector<double> w(v.values.size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = v.values[i] - u.values[i];
  rep.rhs = dirichlet_inner(env, u.vertices, w, w) / (2.0 * cl_size);
  rep.lhs = rep.nu_value - rep.mu_value - rep.flux_term;
  rep.residual =
      std::abs(rep.lhs - rep.rhs) / std::max({1.0, std::abs(rep.lhs), std::abs(rep.rhs)});
  double pq = 0.0;
  for (int i = 0; i < env.window.dim; ++i) pq += p[i] * q[i];
  rep.boundary_flux_defect = std::abs(rep.flux_term - 2.0 * pq);
  return rep;
}

SubadditivityReport subadditivity_check(const std::vector<EnergyRecord>& records,
                                        int child_level, const Direction& dir,
                                        uint64_t master_seed) {
  SubadditivityReport rep;
  rep.child_level = child_level;
  rep.dir = dir;

  auto same_dir = [&](const Direction& d) {
    return d[0] == dir[0] && d[1] == dir[1] && d[2] == dir[2];
  };
  // env -> cube -> (nu, -mu) values at each of the two levels.
  struct Cell {
    double nu = 0.0, neg_mu = 0.0;
    bool has_nu = false, has_mu = false;
  };
  std::map<int64_t, std::map<TriadicCube, Cell>> child, parent;
  int dim = 2;
  for (const EnergyRecord& r : records) {
    if (!same_dir(r.dir)) continue;
    if (r.cube.level != child_level && r.cube.level != child_level + 1) continue;
    auto& table = r.cube.level == child_level ? child : parent;
    Cell& c = table[r.env_index][r.cube];
    dim = r.cube.dim;
    if (r.kind == "nu") {
      c.nu = r.value;
      c.has_nu = true;
    } else if (r.kind == "mu") {
      c.neg_mu = -r.value;
      c.has_mu = true;
    }
  }

  for (const auto& [env, parents] : parent) {
    auto ci = child.find(env);
    if (ci == child.end()) continue;
    double env_nu = 0.0, env_mu = 0.0;
    int64_t env_pairs = 0;
    for (const auto& [pc, pcell] : parents) {
      if (!pcell.has_nu || !pcell.has_mu) continue;
      double child_nu = 0.0, child_mu = 0.0;
      bool complete = true;
      const std::vector<TriadicCube> succ = successors(pc);
      for (const TriadicCube& s : succ) {
        auto it = ci->second.find(s);
        if (it == ci->second.end() || !it->second.has_nu || !it->second.has_mu) {
          complete = false;
          break;
        }
        child_nu += it->second.nu;
        child_mu += it->second.neg_mu;
      }
      if (!complete) continue;
      const double k = double(succ.size());
      env_nu += pcell.nu - child_nu / k;
      env_mu += pcell.neg_mu - child_mu / k;
      ++env_pairs;
    }
    if (env_pairs == 0) continue;
    rep.delta_nu.push_back(env_nu / double(env_pairs));
    rep.delta_neg_mu.push_back(env_mu / double(env_pairs));
    rep.pairs += env_pairs;
  }
  if (rep.delta_nu.empty()) throw std::invalid_argument("no parent/child pairs in the records");

  rep.mean_delta_nu = mean(rep.delta_nu);
  rep.mean_delta_neg_mu = mean(rep.delta_neg_mu);
  rep.ci_nu = bootstrap_mean_ci(rep.delta_nu, 1000, 0.95, master_seed,
                                100 + uint64_t(child_level));
  rep.ci_mu = bootstrap_mean_ci(rep.delta_neg_mu, 1000, 0.95, master_seed,
                                200 + uint64_t(child_level));
  const double d2 = norm_sq(dir, dim);
  rep.slack_nu = calib::kSubadditivitySlackNu * std::pow(3.0, -0.5 * child_level) * d2;
  rep.slack_mu = calib::kSubadditivitySlackMu * std::pow(3.0, -0.25 * child_level) * d2;
  rep.pass_nu = rep.ci_nu.lo <= rep.slack_nu;
  rep.pass_mu = rep.ci_mu.lo <= rep.slack_mu;
  return rep;
}

namespace {

// Percentile bootstrap over environment-level form matrices; fills per-entry
// intervals for the derived matrix given by `derive`.
void bootstrap_matrix_ci(const std::vector<SymMatrix>& per_env, int dim,
                         const std::function<SymMatrix(const SymMatrix&)>& derive,
                         uint64_t master_seed, uint64_t tag,
                         std::array<std::array<Interval, 3>, 3>& ci) {
  const int64_t n = int64_t(per_env.size());
  const int B = 1000;
  std::array<std::array<std::vector<double>, 3>, 3> draws;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) draws[size_t(i)][size_t(j)].reserve(size_t(B));
  }
  uint64_t counter = 0;
  for (int b = 0; b < B; ++b) {
    SymMatrix acc = SymMatrix::identity(dim, 0.0);
    for (int64_t k = 0; k < n; ++k) {
      const uint64_t pick =
          rng_below(master_seed, tag, RngStream::kBootstrap, counter++, uint64_t(n));
      acc = acc.plus(per_env[size_t(pick)]);
    }
    const SymMatrix derived = derive(acc.scaled(1.0 / double(n)));
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) draws[size_t(i)][size_t(j)].push_back(derived.m[i][j]);
    }
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      std::vector<double>& xs = draws[size_t(i)][size_t(j)];
      ci[size_t(i)][size_t(j)] = Interval{quantile(xs, 0.025), quantile(xs, 0.975)};
    }
  }
}

// The ordered-pair values double both cell problems relative to classical
// units, which lands on the inverse side as a factor of four. Degenerate
// forms (no flux extracted at that scale) map to the zero placeholder.
SymMatrix abar_from_neg_mu_form(const SymMatrix& mean_form) {
  if (mean_form.min_eigenvalue() <= 1e-12) return SymMatrix::identity(mean_form.dim, 0.0);
  return mean_form.inverse().scaled(4.0);
}

}  // namespace

EffectiveMatrixEstimate abar_estimate(const std::vector<EnergyRecord>& records, int dim,
                                      uint64_t master_seed) {
  std::vector<int> levels;
  for (const EnergyRecord& r : records) {
    if (std::find(levels.begin(), levels.end(), r.cube.level) == levels.end()) {
      levels.push_back(r.cube.level);
    }
  }
  std::sort(levels.begin(), levels.end());
  if (levels.empty()) throw std::invalid_argument("no records");

  EffectiveMatrixEstimate est;
  est.levels = levels;
  ScaleForms top, mu_top;
  for (int level : levels) {
    ScaleForms sf = collect_scale_forms(records, level, dim);
    est.abar_nu.push_back(sf.nu);
    const SymMatrix mu_side = abar_from_neg_mu_form(sf.neg_mu);
    const bool valid = mu_side.min_eigenvalue() > 0.0;
    est.abar_mu.push_back(mu_side);
    est.mu_valid.push_back(valid ? 1 : 0);
    if (valid) {
      est.mu_top_level = level;
      mu_top = sf;
    }
    if (level == levels.back()) top = std::move(sf);
  }
  est.n_envs = top.n_envs;
  est.unreliable = top.n_envs < 8;
  est.abar = est.abar_nu.back();
  est.sigma_eff = est.abar.scaled(0.5);

  bootstrap_matrix_ci(top.nu_per_env, dim, [](const SymMatrix& s) { return s; }, master_seed,
                      uint64_t(levels.back()) * 2 + 0, est.ci);
  const double scale = std::max(est.abar.op_norm(), 1e-300);
  double ci_width = 0.0;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      ci_width = std::max(ci_width,
                          est.ci[size_t(i)][size_t(j)].hi - est.ci[size_t(i)][size_t(j)].lo);
    }
  }

  if (est.mu_top_level >= 0) {
    bootstrap_matrix_ci(mu_top.neg_mu_per_env, dim, abar_from_neg_mu_form, master_seed,
                        uint64_t(est.mu_top_level) * 2 + 1, est.ci_mu);
    const size_t li = size_t(std::find(levels.begin(), levels.end(), est.mu_top_level) -
                             levels.begin());
    const SymMatrix& mu_side = est.abar_mu[li];
    const SymMatrix& nu_same = est.abar_nu[li];
    const double denom = std::max(nu_same.op_norm(), 1e-300);
    est.duality_gap = mu_side.plus(nu_same, -1.0).op_norm() / denom;
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        ci_width = std::max(ci_width, est.ci_mu[size_t(i)][size_t(j)].hi -
                                          est.ci_mu[size_t(i)][size_t(j)].lo);
      }
    }
    est.sides_agree =
        est.duality_gap <= 2.0 * ci_width / scale + calib::kAbarAgreementSlack *
                                                        std::pow(3.0, -double(est.mu_top_level));
  }
  return est;
}

OmegaSeries omega_decay(const std::vector<EnergyRecord>& records, int dim,
                        const SymMatrix& abar_hat) {
  std::vector<int> levels;
  for (const EnergyRecord& r : records) {
    if (std::find(levels.begin(), levels.end(), r.cube.level) == levels.end()) {
      levels.push_back(r.cube.level);
    }
  }
  std::sort(levels.begin(), levels.end());
  if (levels.empty()) throw std::invalid_argument("no records");
  if (abar_hat.min_eigenvalue() <= 0.0) {
    throw std::invalid_argument("homogenized matrix must be positive definite");
  }

  OmegaSeries out;
  out.levels = levels;
  // Classical-unit inverse: abar_hat carries ordered-pair units, the
  // classical matrix is half of it, so its inverse doubles.
  const SymMatrix B = abar_hat.inverse().scaled(2.0);

  std::vector<SymMatrix> neg_mu, nu;
  for (int level : levels) {
    ScaleForms sf = collect_scale_forms(records, level, dim);
    neg_mu.push_back(sf.neg_mu);
    nu.push_back(sf.nu);
  }

  auto mu_classical = [&](size_t li, const Direction& e) {
    return -0.25 * neg_mu[li].quad(e);
  };
  auto nu_classical = [&](size_t li, const Direction& b) { return 0.25 * nu[li].quad(b); };

  for (size_t li = 0; li < levels.size(); ++li) {
    std::vector<double> per_dir;
    double worst = 0.0;
    for (int i = 0; i < dim; ++i) {
      const Direction e = unit_direction(i);
      const Direction b = B.apply(e);
      double ebe = 0.0;
      for (int k = 0; k < dim; ++k) ebe += e[k] * b[k];
      const double omega = nu_classical(li, b) - mu_classical(li, e) - ebe;
      per_dir.push_back(omega);
      worst = std::max(worst, std::abs(omega));
    }
    out.omega.push_back(per_dir);
    out.omega_max.push_back(worst);
  }

  for (size_t li = 0; li + 1 < levels.size(); ++li) {
    double tau = 0.0;
    double inc_mu = 0.0, inc_nu = 0.0;
    bool first = true;
    for (int i = 0; i < dim; ++i) {
      const Direction e = unit_direction(i);
      const Direction b = B.apply(e);
      const double dmu = mu_classical(li + 1, e) - mu_classical(li, e);
      const double dnu = nu_classical(li, b) - nu_classical(li + 1, b);
      tau += std::max(dmu, 0.0) + std::max(dnu, 0.0);
      if (first) {
        inc_mu = dmu;
        inc_nu = dnu;
        first = false;
      } else {
        inc_mu = std::min(inc_mu, dmu);
        inc_nu = std::min(inc_nu, dnu);
      }
    }
    out.tau.push_back(tau);
    out.mu_increment.push_back(inc_mu);
    out.nu_increment.push_back(inc_nu);
  }

  std::vector<double> xs, ys;
  for (size_t li = 0; li < levels.size(); ++li) {
    if (out.omega_max[li] > 0.0) {
      xs.push_back(double(levels[size_t(li)]) * std::log(3.0));
      ys.push_back(std::log(out.omega_max[li]));
    }
  }
  if (xs.size() >= 2) {
    out.fit = fit_line(xs, ys);
    out.alpha_hat = -out.fit.slope;
  }
  return out;
}

LocalizedPartition build_local_partition(const Environment& env, const TriadicCube& cube,
                                         int n_loc, std::optional<TestMode> forced_mode) {
  if (n_loc < 1) throw std::invalid_argument("localization cutoff must be >= 1");
  auto good = std::make_shared<GoodnessOracle>(env, forced_mode);
  CubeOracle oracle;
  oracle.tag = "Ploc";
  oracle.radius_levels = 1;
  oracle.predicate = [good, n_loc](const TriadicCube& c) {
    return c.level >= n_loc || good->good(c);
  };
  LocalizedPartition lp;
  lp.cube = cube;
  lp.n_loc = n_loc;
  lp.partition = build_partition_local(oracle, env.window, cube);
  lp.partition.mode = forced_mode;
  for (const TriadicCube& e : lp.partition.elements) {
    lp.max_element = std::max(lp.max_element, e.size());
  }
  lp.coarseness_ok = lp.max_element <= pow3(n_loc - 1);
  return lp;
}

LocalizedEnergyResult localized_energy(const Environment& env, const TriadicCube& cube,
                                       int n_loc, const Direction& dir,
                                       const std::string& kind, const SolveOptions& opts,
                                       std::optional<TestMode> forced_mode) {
  if (kind != "mu" && kind != "nu") throw std::invalid_argument("kind must be mu or nu");
  if (n_loc < 1 || n_loc >= cube.level) {
    throw std::invalid_argument("localization cutoff must lie in [1, cube level)");
  }
  opts.validate();

  LocalizedEnergyResult res;
  res.cube = cube;
  res.n_loc = n_loc;
  res.kind = kind;
  res.dir = dir;

  const LocalizedPartition lp = build_local_partition(env, cube, n_loc, forced_mode);
  res.coarseness_ok = lp.coarseness_ok;
  res.max_element = lp.max_element;
  if (!lp.coarseness_ok) {
    res.note = "local partition reaches the cutoff scale";
    return res;  // value 0 by definition
  }
  const Partition& P = lp.partition;
  const Window& w = env.window;

  // Trimmed box: boundary distance at least 3^n_loc.
  const Box box = Box::of_cube(cube);
  Box trimmed = box;
  const int64_t margin = pow3(n_loc);
  for (int i = 0; i < w.dim; ++i) {
    trimmed.lo[size_t(i)] += margin;
    trimmed.hi[size_t(i)] -= margin;
  }

  std::vector<int64_t> trimmed_idx;
  trimmed_idx.reserve(size_t(trimmed.vertex_count()));
  for (int64_t l = 0; l < trimmed.vertex_count(); ++l) {
    trimmed_idx.push_back(w.index(trimmed.vertex_at(l)));
  }
  std::sort(trimmed_idx.begin(), trimmed_idx.end());

  std::vector<uint8_t> used(P.elements.size(), 0);
  for (int64_t wi : trimmed_idx) used[size_t(P.element_of[wi])] = 1;

  // Active cluster: the cube cluster containing every used element cluster.
  const ClusterLabeling lab = label_clusters(env, box);
  Coarsener coarsener(env, P);
  int32_t comp = -1;
  for (size_t ord = 0; ord < P.elements.size(); ++ord) {
    if (!used[ord]) continue;
    const std::optional<int64_t> ai = coarsener.anchor_index(int32_t(ord));
    if (!ai) {
      res.degenerate = true;
      res.note = "element without anchor";
      return res;
    }
    const int32_t c = lab.component_at(w.vertex_at(*ai));
    if (comp < 0) {
      comp = c;
    } else if (comp != c) {
      res.degenerate = true;
      res.note = "local cluster disconnected";
      return res;
    }
  }
  if (comp < 0) {
    res.degenerate = true;
    res.note = "no active elements";
    return res;
  }

  std::vector<int64_t> cluster;
  for (int64_t l = 0; l < box.vertex_count(); ++l) {
    if (lab.component[size_t(l)] == comp) cluster.push_back(w.index(box.vertex_at(l)));
  }
  std::sort(cluster.begin(), cluster.end());

  // Free rows: cluster vertices on the cube's geometric boundary (a lattice
  // neighbor leaves the box or the window). Reading no conductance keeps the
  // value a function of the cube's own edges.
  const int64_t h = w.halfwidth();
  std::vector<uint8_t> free_mask(cluster.size(), 0);
  for (size_t i = 0; i < cluster.size(); ++i) {
    const Vertex x = w.vertex_at(cluster[i]);
    for (int a = 0; a < w.dim && !free_mask[i]; ++a) {
      for (int sgn = -1; sgn <= 1 && !free_mask[i]; sgn += 2) {
        Vertex y = x;
        y[size_t(a)] += sgn;
        if (!box.contains(y) || y[size_t(a)] < -h || y[size_t(a)] > h) free_mask[i] = 1;
      }
    }
  }

  const double volume = double(cube.vertex_count());
  try {
    const ClusterOperator A(env, cluster);
    if (kind == "mu") {
      std::vector<double> c(cluster.size(), 0.0);
      for (const auto& [ord, weight] : coarse_flux_weights(P, trimmed_idx, dir)) {
        const std::optional<int64_t> ai = coarsener.anchor_index(ord);
        if (!ai) {
          res.degenerate = true;
          res.note = "element without anchor";
          return res;
        }
        const int64_t pos = find_position(cluster, *ai);
        if (pos < 0) {
          res.degenerate = true;
          res.note = "anchor outside the active cluster";
          return res;
        }
        c[size_t(pos)] += weight;
      }
      CgResult cg;
      std::vector<double> u = minimize_loaded(A, free_mask, c, opts, &cg);
      const double quad = A.quadratic_form(u);
      double load = 0.0;
      for (size_t i = 0; i < u.size(); ++i) load += c[i] * u[i];
      res.value = (quad - load) / volume;
      res.cross_check = -quad / volume;
      res.iterations = cg.iterations;
      res.values = std::move(u);
    } else {
      std::vector<double> g(cluster.size(), 0.0);
      for (size_t i = 0; i < cluster.size(); ++i) {
        if (!free_mask[i]) continue;
        const Vertex x = w.vertex_at(cluster[i]);
        for (int a = 0; a < w.dim; ++a) g[i] += dir[size_t(a)] * double(x[size_t(a)]);
      }
      DirichletInfo info;
      std::vector<double> v = solve_dirichlet(env, cluster, free_mask, g, opts, &info);
      const double quad = A.quadratic_form(v);
      const double flux = flux_inner(env, cluster, dir, v);
      res.value = quad / volume;
      res.cross_check = (-quad + flux) / volume;
      res.iterations = info.iterations;
      res.values = std::move(v);
    }
  } catch (const std::exception& ex) {
    res.degenerate = true;
    res.value = 0.0;
    res.note = ex.what();
    return res;
  }
  res.residual = std::abs(res.value - res.cross_check);
  res.vertices = std::move(cluster);
  return res;
}

TailExponentFit tail_fit(const std::vector<double>& samples, const std::string& name) {
  if (samples.size() < 50) throw std::invalid_argument("tail_fit needs at least 50 samples");
  TailExponentFit out;
  out.name = name;
  out.n_samples = int64_t(samples.size());
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  if (*mx - *mn <= 1e-12 * std::max(1.0, std::abs(*mx))) {
    out.degenerate = true;
    return out;
  }
  const TailFit tf = fit_stretched_tail(samples);
  out.s = tf.exponent;
  out.r2 = tf.r2;
  out.points = tf.points;
  out.theta = tf.exponent > 0.0 ? std::exp(-tf.log_scale / tf.exponent) : 0.0;
  if (tf.points < 3) out.degenerate = true;
  return out;
}

MinimalScaleEstimate minimal_scale_n(const ConductanceLaw& law, const Window& window,
                                     const EnsembleOptions& opts, const SymMatrix& abar,
                                     double c_param, double alpha) {
  if (opts.n_envs < 1) throw std::invalid_argument("need at least one environment");
  if (c_param <= 0.0) throw std::invalid_argument("threshold must be positive");
  opts.solve.validate();
  const int dim = window.dim;
  const std::vector<Direction> dirs = spanning_directions(dim);
  const SymMatrix abar_inv = abar.inverse();

  struct EnvOut {
    double n_hat = 1.0;
    double worst = 0.0;
    int64_t degenerate = 0;
  };

  auto per_env = [&](int64_t e) -> EnvOut {
    const Environment env = sample_environment(law, window, opts.master_seed, uint64_t(e));
    const Partition P = partition_P(env, opts.mode);
    EnvOut out;
    for (int m = 1; m <= window.level; ++m) {
      const int n = (m + 3) / 4;
      const int k = (m + 7) / 8;
      const int64_t grid = pow3(k);
      const int64_t reach = (pow3(m) - 1) / 2;
      const int64_t kmax = reach / grid;
      const int64_t cell_half = (pow3(n) - 1) / 2;
      double worst_at_m = 0.0;

      std::array<int64_t, 3> z{-kmax, -kmax, -kmax};
      for (int i = dim; i < 3; ++i) z[size_t(i)] = 0;
      while (true) {
        bool fits = true;
        TriadicCube cell;
        cell.dim = dim;
        cell.level = n;
        for (int i = 0; i < dim; ++i) {
          const int64_t zi = z[size_t(i)] * grid;
          cell.center[size_t(i)] = int32_t(zi);
          if (std::abs(zi) + cell_half > window.halfwidth()) fits = false;
        }
        if (fits) {
          std::vector<double> mu_vals, nu_vals;
          bool ok = true;
          for (const Direction& d : dirs) {
            try {
              const VariationalResult um = minimize_mu(env, cell, P, d, opts.solve);
              const VariationalResult vn = solve_nu(env, cell, P, d, opts.solve);
              if (um.degenerate || vn.degenerate) {
                ok = false;
                break;
              }
              mu_vals.push_back(-um.objective);
              nu_vals.push_back(vn.objective);
            } catch (const std::exception&) {
              ok = false;
              break;
            }
          }
          double dev;
          if (!ok) {
            dev = calib::kDegenerateCellDeviation;
            ++out.degenerate;
          } else {
            const SymMatrix M = form_matrix(dim, mu_vals);
            const SymMatrix N = form_matrix(dim, nu_vals);
            // The -mu form converges to abar^{-1} after the factor-four
            // translation; the nu form converges to abar directly.
            const double dev_mu = abar_inv.plus(M.scaled(0.25), -1.0).op_norm();
            const double dev_nu = 0.25 * abar.plus(N, -1.0).op_norm();
            dev = dev_mu + dev_nu;
          }
          worst_at_m = std::max(worst_at_m, dev);
        }
        int i = dim - 1;
        while (i >= 0 && ++z[size_t(i)] > kmax) z[size_t(i--)] = -kmax;
        if (i < 0) break;
      }
      out.worst = std::max(out.worst, worst_at_m);
      if (worst_at_m >= c_param * std::pow(3.0, -double(m) * alpha)) {
        out.n_hat = double(pow3(m));
      }
    }
    return out;
  };

  const auto outs = parallel_map<EnvOut>(opts.n_envs, opts.workers, per_env);
  MinimalScaleEstimate est;
  est.c_param = c_param;
  est.alpha = alpha;
  for (const EnvOut& o : outs) {
    est.n_hat.push_back(o.n_hat);
    est.worst_deviation.push_back(o.worst);
    est.degenerate_cells += o.degenerate;
  }
  est.tail = fit_stretched_tail(est.n_hat);
  return est;
}

}  // namespace perchomog
