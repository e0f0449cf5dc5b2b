#pragma once

#include <cstddef>
#include <vector>

namespace fwq {

struct SampleStats {
  std::size_t n = 0;
  double mean = 0;
  double var = 0;  // unbiased sample variance
  double se = 0;   // standard error of the mean
};

SampleStats sample_stats(const std::vector<double>& xs);

// Sample covariance (unbiased) of paired observations.
double sample_cov(const std::vector<double>& xs, const std::vector<double>& ys);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
  double intercept_se = 0;
};

// Ordinary least squares y = intercept + slope * x with residual-based errors.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Standard error of the ratio mean(x)/mean(y) by the delta method, using the
// sample variances and covariance of the paired observations.
double ratio_se(const std::vector<double>& xs, const std::vector<double>& ys);

// One-sample Kolmogorov-Smirnov distance of xs against the unit exponential
// law (xs are assumed already scaled so the hypothesized mean is 1).
double ks_exponential_distance(std::vector<double> xs);

// Asymptotic KS p-value with the small-sample correction factor
// (sqrt(n) + 0.12 + 0.11/sqrt(n)) * d fed into the Kolmogorov series.
double ks_p_value(double d, std::size_t n);

// Empirical survival fraction P(x > t).
double empirical_survival(const std::vector<double>& xs, double t);

struct TailFit {
  double rate = 0;  // largest exponential rate whose bound the tail respects
  std::vector<double> grid;      // probe points
  std::vector<double> survival;  // empirical survival at each probe
};

// Fits the steepest exponential envelope e^{-rate*t} lying above the
// empirical tail on a uniform probe grid. Probes where the survival is
// still 1 or already 0 put no constraint on the rate.
TailFit exponential_tail_fit(const std::vector<double>& xs, double t_max = 5.0, int probes = 20);

}  // namespace fwq
