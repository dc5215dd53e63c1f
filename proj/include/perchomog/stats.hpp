#pragma once

#include <cstdint>
#include <vector>

namespace perchomog {

double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);  // unbiased; 0 for n < 2

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Percentile bootstrap CI for the mean; deterministic given (seed, stream).
Interval bootstrap_mean_ci(const std::vector<double>& xs, int resamples, double level,
                           uint64_t master_seed, uint64_t stream);

double quantile(std::vector<double> xs, double q);  // linear interpolation

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y ~ slope*x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Stretched-exponential tail diagnostic: fits log(-log S(t)) ~ s*log t + b on
// the empirical survival function S(t) = P[X > t] over the sample's support.
// Exponent s > 0 indicates a tail at least as thin as exp(-c t^s).
struct TailFit {
  double exponent = 0.0;   // fitted s
  double log_scale = 0.0;  // fitted b
  double r2 = 0.0;
  int points = 0;          // thresholds used
};

TailFit fit_stretched_tail(const std::vector<double>& samples);

}  // namespace perchomog
