#include "mfq/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mfq/core.hpp"

namespace mfq {

namespace {

void derivative(const std::vector<double>& x, const Params& p, Convention c,
                std::vector<double>& out) {
  auto f = drift(x, p, c);
  // level J+1 flux is dropped by the truncation; the overflow guard keeps it tiny
  out.assign(f.begin(), f.begin() + static_cast<long>(x.size()));
}

}  // namespace

std::vector<double> uniform_grid(double T, int points) {
  if (points < 2) throw std::invalid_argument("grid needs at least 2 points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = T * i / (points - 1);
  g.back() = T;
  return g;
}

MeanFieldPath solve_ode(const Params& p, std::vector<double> rho0,
                        std::vector<double> grid, int J, Convention c) {
  p.validate();
  if (J < 1) throw std::invalid_argument("truncation J must be >= 1");
  if (grid.size() < 2 || grid.front() != 0.0)
    throw std::invalid_argument("grid must start at 0 and have >= 2 points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("grid not increasing");
  if (static_cast<int>(rho0.size()) > J + 1) {
    for (std::size_t j = J + 1; j < rho0.size(); ++j)
      if (rho0[j] != 0.0) throw TruncationOverflow("initial state has mass beyond J");
  }
  rho0.resize(J + 1, 0.0);

  MeanFieldPath path;
  path.params = p;
  path.convention = c;
  path.truncation = J;
  path.grid = grid;
  path.states.reserve(grid.size());
  path.states.push_back(rho0);

  const double h_max = 0.01 / (p.lambda + p.nu);
  std::vector<double> x = rho0;
  std::vector<double> k1, k2, k3, k4, tmp(x.size());

  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double span = grid[g] - grid[g - 1];
    const int nsub = std::max<int>(1, static_cast<int>(std::ceil(span / h_max - 1e-12)));
    const double h = span / nsub;
    for (int s = 0; s < nsub; ++s) {
      derivative(x, p, c, k1);
      for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
      derivative(tmp, p, c, k2);
      for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
      derivative(tmp, p, c, k3);
      for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + h * k3[i];
      derivative(tmp, p, c, k4);
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

      for (double& v : x)
        if (v < 0.0) v = 0.0;
      if (c == Convention::MassConserving) {
        const double sum = std::accumulate(x.begin(), x.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-12) {
          for (double& v : x) v /= sum;
          ++path.clip_events;
        }
      }
      if (x[J] > 1e-9)
        throw TruncationOverflow("tail mass at truncation level exceeds 1e-9; increase J");
    }
    path.states.push_back(x);
  }
  return path;
}

std::vector<double> simpson_weights(const std::vector<double>& grid) {
  const int n = static_cast<int>(grid.size()) - 1;  // interval count
  if (n < 2) throw std::invalid_argument("Simpson needs at least 3 grid points");
  const double h = grid[1] - grid[0];
  for (int i = 1; i <= n; ++i)
    if (std::abs((grid[i] - grid[i - 1]) - h) > 1e-9 * std::max(1.0, h))
      throw std::invalid_argument("Simpson weights require a uniform grid");

  std::vector<double> w(grid.size(), 0.0);
  int even_end = n;  // apply 1-4-2 pattern over [0, even_end]
  if (n % 2 != 0) {
    if (n < 3) throw std::invalid_argument("Simpson needs at least 3 intervals here");
    even_end = n - 3;
    // 3/8 rule over the last three intervals
    w[n - 3] += 3.0 * h / 8.0;
    w[n - 2] += 9.0 * h / 8.0;
    w[n - 1] += 9.0 * h / 8.0;
    w[n] += 3.0 * h / 8.0;
  }
  for (int i = 0; i + 2 <= even_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  return w;
}

std::vector<double> time_average(
    const MeanFieldPath& path,
    const std::function<double(const std::vector<double>&, int)>& f) {
  const auto w = simpson_weights(path.grid);
  const int levels = path.truncation + 2;
  std::vector<double> acc(levels, 0.0);
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    if (w[k] == 0.0) continue;
    for (int j = 0; j < levels; ++j) acc[j] += w[k] * f(path.states[k], j);
  }
  return acc;
}

std::vector<double> time_average_u(const MeanFieldPath& path) {
  const auto w = simpson_weights(path.grid);
  const int levels = path.truncation + 2;
  std::vector<double> acc(levels, 0.0);
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    if (w[k] == 0.0) continue;
    const auto s = tail_sums(path.states[k]);
    for (int j = 0; j < levels; ++j) acc[j] += w[k] * u_regressor(path.states[k], s, j);
  }
  return acc;
}

std::vector<double> time_average_v(const MeanFieldPath& path) {
  return time_average(path, [&](const std::vector<double>& x, int j) {
    return v_regressor(x, j, path.convention);
  });
}

}  // namespace mfq
