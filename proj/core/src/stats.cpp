#include "chaoswave/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chaoswave {

Moments compute_moments(const std::vector<double>& xs) {
  Moments m;
  m.n = static_cast<long>(xs.size());
  if (m.n < 2) throw std::invalid_argument("compute_moments: need n >= 2");
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / m.n;
  double s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    s2 += d * d;
    s3 += d * d * d;
    s4 += d * d * d * d;
  }
  m.variance = s2 / (m.n - 1);
  const double sd = std::sqrt(m.variance);
  m.skewness = (s3 / m.n) / (sd * sd * sd);
  m.mean_se = sd / std::sqrt(static_cast<double>(m.n));
  const double m4 = s4 / m.n;
  const double var_of_var = (m4 - (m.n - 3.0) / (m.n - 1.0) * m.variance * m.variance) / m.n;
  m.variance_se = std::sqrt(std::max(0.0, var_of_var));
  return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_statistic(std::vector<double> xs,
                    const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

std::vector<double> kde_gaussian(const std::vector<double>& xs,
                                 double bandwidth,
                                 const std::vector<double>& query) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth > 0");
  std::vector<double> out(query.size(), 0.0);
  const double norm = 1.0 / (xs.size() * bandwidth * std::sqrt(2.0 * 3.14159265358979323846));
  for (std::size_t q = 0; q < query.size(); ++q) {
    double s = 0.0;
    for (double x : xs) {
      const double z = (query[q] - x) / bandwidth;
      if (std::abs(z) < 12.0) s += std::exp(-0.5 * z * z);
    }
    out[q] = s * norm;
  }
  return out;
}

double atom_scan(std::vector<double> xs, double width, double exclude) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double best = 0.0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < xs.size(); ++lo) {
    if (hi < lo) hi = lo;
    while (hi + 1 < xs.size() && xs[hi + 1] <= xs[lo] + width) ++hi;
    // The window [xs[lo], xs[lo] + width] must stay clear of (-exclude, exclude).
    if (xs[lo] + width > -exclude && xs[lo] < exclude) continue;
    best = std::max(best, static_cast<double>(hi - lo + 1) / n);
  }
  return best;
}

}  // namespace chaoswave
