#pragma once

#include <span>
#include <utility>

namespace mfq {

/// Per-coordinate sample statistics used by the experiment tables.
struct MomentSummary {
  double mean = 0;
  double sd = 0;          // denominator n-1
  double mse = 0;         // against the supplied true value
  double mean_error = 0;
  double skewness = 0;    // population (1/n) normalization
  double kurtosis = 0;    // raw, normal reference is 3
  int n = 0;
};

MomentSummary moment_summary(std::span<const double> samples, double true_value);

/// One-sample Kolmogorov-Smirnov statistic against a normal with plug-in
/// sample mean and sd; asymptotic Kolmogorov p-value. Throws on n < 5 or
/// zero sample variance.
std::pair<double, double> ks_normality(std::span<const double> samples);

/// Survival function of the Kolmogorov distribution at x:
/// 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2), truncated below 1e-12.
double kolmogorov_p_value(double x);

}  // namespace mfq
