#include "fwq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fwq {

SampleStats sample_stats(const std::vector<double>& xs) {
  SampleStats s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.var = ss / static_cast<double>(s.n - 1);
  s.se = std::sqrt(s.var / static_cast<double>(s.n));
  return s;
}

double sample_cov(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("covariance needs equal-length samples, n >= 2");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double c = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) c += (xs[i] - mx) * (ys[i] - my);
  return c / static_cast<double>(xs.size() - 1);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit needs equal-length samples, n >= 2");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit needs at least two distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    double s2 = rss / (n - 2);
    f.slope_se = std::sqrt(s2 / sxx);
    f.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return f;
}

double ratio_se(const std::vector<double>& xs, const std::vector<double>& ys) {
  SampleStats a = sample_stats(xs), b = sample_stats(ys);
  if (a.n < 2 || b.mean == 0) return 0;
  double c = sample_cov(xs, ys);
  double r = a.mean / b.mean;
  double rel = a.var / (a.mean * a.mean) + b.var / (b.mean * b.mean) -
               2 * c / (a.mean * b.mean);
  if (rel < 0) rel = 0;
  return std::abs(r) * std::sqrt(rel / static_cast<double>(a.n));
}

double ks_exponential_distance(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("KS distance needs samples");
  std::sort(xs.begin(), xs.end());
  double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double cdf = 1.0 - std::exp(-xs[i]);
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(cdf - lo, hi - cdf));
  }
  return d;
}

double ks_p_value(double d, std::size_t n) {
  if (n == 0 || d <= 0) return 1.0;
  double rn = std::sqrt(static_cast<double>(n));
  double lambda = (rn + 0.12 + 0.11 / rn) * d;
  double p = 0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * std::exp(-2.0 * lambda * lambda * k * k);
    p += (k % 2 == 1) ? term : -term;
    if (term < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, p));
}

double empirical_survival(const std::vector<double>& xs, double t) {
  if (xs.empty()) return 0;
  std::size_t cnt = 0;
  for (double x : xs)
    if (x > t) ++cnt;
  return static_cast<double>(cnt) / static_cast<double>(xs.size());
}

TailFit exponential_tail_fit(const std::vector<double>& xs, double t_max, int probes) {
  if (xs.empty() || probes < 1) throw std::invalid_argument("tail fit needs samples and probes");
  TailFit fit;
  bool constrained = false;
  for (int i = 1; i <= probes; ++i) {
    double t = t_max * static_cast<double>(i) / probes;
    double s = empirical_survival(xs, t);
    fit.grid.push_back(t);
    fit.survival.push_back(s);
    if (s > 0 && s < 1) {
      double rate = -std::log(s) / t;
      if (!constrained || rate < fit.rate) fit.rate = rate;
      constrained = true;
    }
  }
  if (!constrained) fit.rate = 0;
  return fit;
}

}  // namespace fwq
