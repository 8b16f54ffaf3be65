#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace mfq {

/// S[j] = sum_{i >= j} x_i, computed by one backward pass; S.size() == x.size() + 1.
inline std::vector<double> tail_sums(std::span<const double> x) {
  std::vector<double> s(x.size() + 1, 0.0);
  for (std::size_t j = x.size(); j-- > 0;) s[j] = s[j + 1] + x[j];
  return s;
}

/// Probability vector over queue-length levels 0..J; entries beyond the
/// stored support are implicitly 0.
struct SimplexVector {
  std::vector<double> probs;

  int levels() const { return static_cast<int>(probs.size()); }
  double at(int j) const {
    return (j >= 0 && j < levels()) ? probs[j] : 0.0;
  }

  static SimplexVector checked(std::vector<double> p, double tol = 1e-12) {
    double sum = 0.0;
    for (double v : p) {
      if (v < 0.0) throw std::invalid_argument("simplex entry < 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
      throw std::invalid_argument("simplex entries do not sum to 1");
    return SimplexVector{std::move(p)};
  }
};

/// Queue-length counts for an N-server system; the sufficient Markov state.
struct StateCounts {
  std::vector<std::int64_t> counts;
  std::int64_t N = 0;

  void validate() const {
    if (N < 1) throw std::invalid_argument("N must be >= 1");
    std::int64_t sum = 0;
    for (auto c : counts) {
      if (c < 0) throw std::invalid_argument("negative count");
      sum += c;
    }
    if (sum != N) throw std::invalid_argument("counts do not sum to N");
  }

  static StateCounts all_empty(std::int64_t n) {
    return StateCounts{{n}, n};
  }

  std::vector<double> measure() const {
    std::vector<double> m(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j)
      m[j] = static_cast<double>(counts[j]) / static_cast<double>(N);
    return m;
  }
};

/// Direction in the zero-sum subspace (fluctuations live here).
struct ZeroSumVector {
  std::vector<double> values;

  static ZeroSumVector checked(std::vector<double> v, double tol = 1e-10) {
    const double sum = std::accumulate(v.begin(), v.end(), 0.0);
    if (std::abs(sum) > tol)
      throw std::invalid_argument("entries do not sum to 0");
    return ZeroSumVector{std::move(v)};
  }
};

}  // namespace mfq
