#include "perchomog/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "perchomog/rng.hpp"

namespace perchomog {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
  size_t n = xs.size();
  if (n < 2) return 0.0;
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(n - 1);
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  if (q <= 0.0) return xs.front();
  if (q >= 1.0) return xs.back();
  double pos = q * static_cast<double>(xs.size() - 1);
  size_t i = static_cast<size_t>(pos);
  double frac = pos - static_cast<double>(i);
  if (i + 1 >= xs.size()) return xs.back();
  return xs[i] * (1.0 - frac) + xs[i + 1] * frac;
}

Interval bootstrap_mean_ci(const std::vector<double>& xs, int resamples, double level,
                           uint64_t master_seed, uint64_t stream) {
  if (xs.empty()) throw std::invalid_argument("bootstrap of empty sample");
  size_t n = xs.size();
  std::vector<double> means;
  means.reserve(resamples);
  uint64_t counter = 0;
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
      uint64_t j = rng_below(master_seed, static_cast<uint64_t>(r),
                             static_cast<RngStream>(stream), counter++, n);
      s += xs[j];
    }
    means.push_back(s / static_cast<double>(n));
  }
  double alpha = (1.0 - level) / 2.0;
  return Interval{quantile(means, alpha), quantile(means, 1.0 - alpha)};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_line needs >= 2 paired points");
  }
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  LineFit f;
  if (denom == 0.0) return f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += e * e;
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

TailFit fit_stretched_tail(const std::vector<double>& samples) {
  TailFit out;
  if (samples.empty()) return out;
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  double n = static_cast<double>(sorted.size());
  // Thresholds at distinct sample values t with 0 < S(t) < 1 and t > 0.
  std::vector<double> lx, ly;
  for (size_t i = 0; i + 1 < sorted.size(); ++i) {
    double t = sorted[i];
    if (t <= 0.0 || sorted[i + 1] == t) continue;
    double survival = static_cast<double>(sorted.size() - 1 - i) / n;
    if (survival <= 0.0 || survival >= 1.0) continue;
    lx.push_back(std::log(t));
    ly.push_back(std::log(-std::log(survival)));
  }
  if (lx.size() < 2) return out;
  LineFit f = fit_line(lx, ly);
  out.exponent = f.slope;
  out.log_scale = f.intercept;
  out.r2 = f.r2;
  out.points = static_cast<int>(lx.size());
  return out;
}

}  // namespace perchomog
