#include "mfq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mfq {

MomentSummary moment_summary(std::span<const double> samples, double true_value) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw std::invalid_argument("moment_summary needs at least 2 samples");
  MomentSummary s;
  s.n = n;
  for (double x : samples) {
    s.mean += x;
    s.mse += (x - true_value) * (x - true_value);
    s.mean_error += x - true_value;
  }
  s.mean /= n;
  s.mse /= n;
  s.mean_error /= n;

  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : samples) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  s.sd = std::sqrt(m2 / (n - 1));
  const double var_pop = m2 / n;
  if (var_pop > 0) {
    const double sd_pop = std::sqrt(var_pop);
    s.skewness = (m3 / n) / (sd_pop * sd_pop * sd_pop);
    s.kurtosis = (m4 / n) / (var_pop * var_pop);
  }
  return s;
}

double kolmogorov_p_value(double x) {
  if (x <= 0) return 1.0;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    p += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * p, 0.0, 1.0);
}

std::pair<double, double> ks_normality(std::span<const double> samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 5) throw std::invalid_argument("ks_normality needs at least 5 samples");
  double mean = 0;
  for (double x : samples) mean += x;
  mean /= n;
  double m2 = 0;
  for (double x : samples) m2 += (x - mean) * (x - mean);
  if (m2 <= 0) throw std::invalid_argument("ks_normality: zero sample variance");
  const double sd = std::sqrt(m2 / (n - 1));

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = (sorted[i] - mean) / (sd * std::sqrt(2.0));
    const double cdf = 0.5 * std::erfc(-z);
    d = std::max(d, std::max((i + 1.0) / n - cdf, cdf - static_cast<double>(i) / n));
  }
  return {d, kolmogorov_p_value(std::sqrt(static_cast<double>(n)) * d)};
}

}  // namespace mfq
