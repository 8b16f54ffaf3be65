#include "mfq/core.hpp"

#include <algorithm>
#include <cmath>

namespace mfq {

namespace {

inline double at(std::span<const double> x, int j) {
  return (j >= 0 && j < static_cast<int>(x.size())) ? x[j] : 0.0;
}

// Tail sum with S_j = 0 beyond the stored range and S_{-1} = S_0 (x_{-1} = 0).
inline double tail(std::span<const double> s, int j) {
  if (j < 0) j = 0;
  return j < static_cast<int>(s.size()) ? s[j] : 0.0;
}

}  // namespace

double u_regressor(std::span<const double> x, std::span<const double> tails, int j) {
  const double xm1 = at(x, j - 1);
  const double xj = at(x, j);
  return 2.0 * xm1 * tail(tails, j) - 2.0 * xj * tail(tails, j + 1) + xm1 * xm1 - xj * xj;
}

double u_regressor(std::span<const double> x, int j) {
  const auto s = tail_sums(x);
  return u_regressor(x, s, j);
}

double v_regressor(std::span<const double> x, int j, Convention c) {
  if (j == 0 && c == Convention::MassConserving) return at(x, 1);
  return at(x, j + 1) - at(x, j);
}

double du_regressor(std::span<const double> x, std::span<const double> tails, int j, int l) {
  if (l < j - 1) return 0.0;
  if (l == j - 1) return 2.0 * tail(tails, j - 1);
  if (l == j) return 2.0 * at(x, j - 1) - 2.0 * tail(tails, j);
  return 2.0 * at(x, j - 1) - 2.0 * at(x, j);
}

double dv_regressor(int j, int l, Convention c) {
  if (j == 0 && l == 0 && c == Convention::MassConserving) return 0.0;
  if (l == j + 1) return 1.0;
  if (l == j) return -1.0;
  return 0.0;
}

std::vector<double> drift(std::span<const double> x, const Params& p, Convention c) {
  if (p.L != 2) return drift_binomial(x, p, c);
  const auto s = tail_sums(x);
  const int n = static_cast<int>(x.size());
  std::vector<double> f(n + 1);
  for (int j = 0; j <= n; ++j)
    f[j] = p.lambda * u_regressor(x, s, j) + p.nu * v_regressor(x, j, c);
  return f;
}

std::vector<double> drift_binomial(std::span<const double> x, const Params& p, Convention c) {
  const auto s = tail_sums(x);
  const int n = static_cast<int>(x.size());
  const int L = p.L;
  std::vector<double> binom(L + 1);
  binom[0] = 1.0;
  for (int i = 1; i <= L; ++i) binom[i] = binom[i - 1] * (L - i + 1) / i;

  // sum_{i=1..L} C(L,i) a^i b^(L-i), running powers only
  const auto arrivals = [&](double a, double b) {
    double acc = 0.0;
    double ai = 1.0;
    std::vector<double> bp(L + 1);
    bp[0] = 1.0;
    for (int i = 1; i <= L; ++i) bp[i] = bp[i - 1] * b;
    for (int i = 1; i <= L; ++i) {
      ai *= a;
      acc += binom[i] * ai * bp[L - i];
    }
    return acc;
  };

  std::vector<double> f(n + 1);
  for (int j = 0; j <= n; ++j) {
    f[j] = p.lambda * (arrivals(at(x, j - 1), tail(s, j)) - arrivals(at(x, j), tail(s, j + 1))) +
           p.nu * v_regressor(x, j, c);
  }
  return f;
}

std::vector<double> g_linearized(std::span<const double> x, std::span<const double> s,
                                 const Params& p, Convention c) {
  if (p.L != 2) throw std::invalid_argument("g_linearized requires L = 2");
  const auto ts = tail_sums(s);
  const auto tx = tail_sums(x);
  const int n = static_cast<int>(std::max(x.size(), s.size()));
  std::vector<double> g(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double xm1 = at(x, j - 1), xj = at(x, j);
    const double sm1 = at(s, j - 1), sj = at(s, j);
    const double lam_part = xm1 * tail(ts, j) + sm1 * tail(tx, j) - xj * tail(ts, j + 1) -
                            sj * tail(tx, j + 1) + sm1 * xm1 - sj * xj;
    double nu_part;
    if (j == 0 && c == Convention::MassConserving)
      nu_part = at(x, 1);
    else
      nu_part = at(x, j + 1) - xj;
    g[j] = 2.0 * p.lambda * lam_part + p.nu * nu_part;
  }
  return g;
}

Eigen::MatrixXd phi_matrix(std::span<const double> s, const Params& p, int dim) {
  if (p.L != 2) throw std::invalid_argument("phi_matrix requires L = 2");
  const auto ts = tail_sums(s);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(dim, dim);
  const auto add_pair = [&](int a, int b, double w) {
    // w * (e_a - e_b)(e_a - e_b)^T
    phi(a, a) += w;
    phi(b, b) += w;
    phi(a, b) -= w;
    phi(b, a) -= w;
  };
  for (int j = 0; j + 1 < dim; ++j) {
    const double sj = at(s, j);
    const double w = p.lambda * (2.0 * sj * tail(ts, j + 1) + sj * sj);
    if (w != 0.0) add_pair(j + 1, j, w);
  }
  for (int j = 1; j < dim; ++j) {
    const double w = p.nu * at(s, j);
    if (w != 0.0) add_pair(j - 1, j, w);
  }
  return phi;
}

Eigen::MatrixXd drift_jacobian(std::span<const double> s, const Params& p, Convention c,
                               int dim) {
  const auto ts = tail_sums(s);
  Eigen::MatrixXd b(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int l = 0; l < dim; ++l)
      b(j, l) = p.lambda * du_regressor(s, ts, j, l) + p.nu * dv_regressor(j, l, c);
  return b;
}

Eigen::MatrixXd c_matrix(std::span<const double> s, const Params& p, Convention c, int dim) {
  if (p.L != 2) throw std::invalid_argument("c_matrix requires L = 2");
  const auto ts = tail_sums(s);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const double sj = at(s, j);
    const double sm1 = at(s, j - 1);
    const double Sj = tail(ts, j);
    for (int l = 0; l <= std::min(j + 1, dim - 1); ++l) {
      if (l <= j - 2)
        m(j, l) = -2.0 * p.lambda * (sm1 - sj);
      else if (l == j - 1)
        m(j, l) = 2.0 * p.lambda * (Sj + sj);
      else if (l == j)
        m(j, l) = 2.0 * p.lambda * (sj - Sj) -
                  ((j == 0 && c == Convention::MassConserving) ? 0.0 : p.nu);
      else
        m(j, l) = p.nu;
    }
  }
  return m;
}

std::vector<double> fixed_point(const Params& p, int J) {
  const double r = p.lambda / p.nu;
  std::vector<double> tails(J + 2, 0.0);
  for (int j = 0; j <= J; ++j) {
    // exponent (L^j - 1)/(L - 1)
    double e = 0.0, lp = 1.0;
    for (int i = 0; i < j; ++i) {
      e += lp;
      lp *= p.L;
    }
    tails[j] = std::pow(r, e);
  }
  std::vector<double> rho(J + 1);
  for (int j = 0; j <= J; ++j) rho[j] = tails[j] - tails[j + 1];
  return rho;
}

int suggested_truncation(const Params& p, int min_level) {
  const double r = p.lambda / p.nu;
  int J = min_level + 2;
  if (r >= 1.0) return std::max(J, 64);
  double e = 0.0, lp = 1.0;
  int j = 0;
  while (j < 64 && e * std::log(r) > std::log(1e-14)) {
    e += lp;
    lp *= p.L;
    ++j;
  }
  return std::max(J, j);
}

}  // namespace mfq
