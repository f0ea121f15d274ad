#pragma once

#include <functional>
#include <vector>

namespace chaoswave {

struct Moments {
  long n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;  // large-sample
};

Moments compute_moments(const std::vector<double>& xs);

double normal_cdf(double x);
double normal_quantile(double p);

/// Two-sided Kolmogorov-Smirnov statistic against a given cdf.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);

/// Gaussian kernel density estimate at the query points.
std::vector<double> kde_gaussian(const std::vector<double>& xs, double bandwidth,
                                 const std::vector<double>& query);

/// Largest empirical mass of any interval of the given width whose closure
/// avoids (-exclude, exclude).
double atom_scan(std::vector<double> xs, double width, double exclude);

}  // namespace chaoswave
