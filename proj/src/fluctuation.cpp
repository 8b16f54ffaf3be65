#include "mfq/fluctuation.hpp"

#include <cmath>
#include <stdexcept>

#include "mfq/core.hpp"
#include "mfq/rng.hpp"

namespace mfq {

namespace {

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, double clamp = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev(i) = ev(i) > clamp ? std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXd propagate_covariance(const MeanFieldPath& path, const Params& p,
                                     const Eigen::MatrixXd& sigma0) {
  if (p.L != 2) throw std::invalid_argument("propagate_covariance requires L = 2");
  const int dim = path.truncation + 1;
  if (sigma0.rows() != dim || sigma0.cols() != dim)
    throw std::invalid_argument("sigma0 dimension mismatch with path truncation");

  const Convention c = path.convention;
  std::vector<double> rho = path.states.front();
  Eigen::MatrixXd sigma = sigma0;
  const double h_max = 0.01 / (p.lambda + p.nu);

  struct Deriv {
    std::vector<double> drho;
    Eigen::MatrixXd dsigma;
  };
  const auto eval = [&](const std::vector<double>& r, const Eigen::MatrixXd& s) {
    Deriv d;
    auto f = drift(r, p, c);
    d.drho.assign(f.begin(), f.begin() + dim);
    const Eigen::MatrixXd b = drift_jacobian(r, p, c, dim);
    d.dsigma = b * s + s * b.transpose() + phi_matrix(r, p, dim);
    return d;
  };

  for (std::size_t g = 1; g < path.grid.size(); ++g) {
    const double span = path.grid[g] - path.grid[g - 1];
    const int nsub = std::max<int>(1, static_cast<int>(std::ceil(span / h_max - 1e-12)));
    const double h = span / nsub;
    for (int s = 0; s < nsub; ++s) {
      const Deriv k1 = eval(rho, sigma);
      std::vector<double> r2(dim);
      for (int i = 0; i < dim; ++i) r2[i] = rho[i] + 0.5 * h * k1.drho[i];
      const Deriv k2 = eval(r2, sigma + 0.5 * h * k1.dsigma);
      std::vector<double> r3(dim);
      for (int i = 0; i < dim; ++i) r3[i] = rho[i] + 0.5 * h * k2.drho[i];
      const Deriv k3 = eval(r3, sigma + 0.5 * h * k2.dsigma);
      std::vector<double> r4(dim);
      for (int i = 0; i < dim; ++i) r4[i] = rho[i] + h * k3.drho[i];
      const Deriv k4 = eval(r4, sigma + h * k3.dsigma);
      for (int i = 0; i < dim; ++i)
        rho[i] += h / 6.0 * (k1.drho[i] + 2 * k2.drho[i] + 2 * k3.drho[i] + k4.drho[i]);
      sigma += h / 6.0 * (k1.dsigma + 2 * k2.dsigma + 2 * k3.dsigma + k4.dsigma);
      if (rho[dim - 1] > 1e-9)
        throw TruncationOverflow("covariance propagation hit the truncation level");
    }
  }
  return sigma;
}

FluctuationSampler::FluctuationSampler(const MeanFieldPath& path, const Params& p)
    : path_(&path), params_(p) {
  if (p.L != 2) throw std::invalid_argument("FluctuationSampler requires L = 2");
  const int dim = path.truncation + 1;
  noise_roots_.reserve(path.grid.size());
  for (const auto& state : path.states)
    noise_roots_.push_back(symmetric_sqrt(phi_matrix(state, p, dim)));
}

std::vector<std::vector<double>> FluctuationSampler::sample(const std::vector<double>& z0,
                                                            std::uint64_t seed) const {
  const auto& path = *path_;
  const int dim = path.truncation + 1;
  std::vector<double> z = z0;
  z.resize(dim, 0.0);

  Rng rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(path.grid.size());
  out.push_back(z);
  Eigen::VectorXd xi(dim);
  for (std::size_t k = 1; k < path.grid.size(); ++k) {
    const double dt = path.grid[k] - path.grid[k - 1];
    const auto g = g_linearized(z, path.states[k - 1], params_, path.convention);
    for (int i = 0; i < dim; ++i) xi(i) = rng.normal();
    const Eigen::VectorXd noise = noise_roots_[k - 1] * xi;
    const double sq = std::sqrt(dt);
    for (int i = 0; i < dim; ++i) z[i] += g[i] * dt + sq * noise(i);
    out.push_back(z);
  }
  return out;
}

double c_matrix_residual(const MeanFieldPath& path, const Params& p,
                         const std::vector<double>& x, std::size_t t_index) {
  if (t_index >= path.states.size()) throw std::out_of_range("grid index out of range");
  const auto& s = path.states[t_index];
  const int dim = path.truncation + 1;
  const Eigen::MatrixXd c = c_matrix(s, p, path.convention, dim);
  Eigen::VectorXd xv(dim);
  for (int i = 0; i < dim; ++i) xv(i) = i < static_cast<int>(x.size()) ? x[i] : 0.0;
  const Eigen::VectorXd cx = c * xv;
  const auto g = g_linearized(x, s, p, path.convention);
  double res = 0.0;
  for (int i = 0; i < dim; ++i) res += std::abs(cx(i) - g[i]);
  return res;
}

LimitLawSample limit_law_sample(const MeanFieldPath& path, const Params&,
                                const std::vector<std::vector<double>>& z_path) {
  if (z_path.size() != path.grid.size())
    throw std::invalid_argument("fluctuation trajectory grid mismatch");
  const Convention c = path.convention;
  const int levels = path.truncation + 2;

  const auto ubar = time_average_u(path);
  const auto vbar = time_average_v(path);
  const auto coef = coefficients_from_path(path);
  const auto w = simpson_weights(path.grid);

  // DU_j = int sum_i dU_j/dx_i (rho(s)) Z_i(s) ds; the i-sum collapses to
  // three terms because dU_j/dx_i is constant for i >= j+1. DV_j likewise.
  std::vector<double> du_int(levels, 0.0), dv_int(levels, 0.0);
  std::vector<double> dz(levels, 0.0);  // Z_j(T) - Z_j(0)
  const auto at = [](const std::vector<double>& v, int j) {
    return (j >= 0 && j < static_cast<int>(v.size())) ? v[j] : 0.0;
  };
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    if (w[k] == 0.0) continue;
    const auto& rho = path.states[k];
    const auto& z = z_path[k];
    const auto ts = tail_sums(rho);
    const auto tz = tail_sums(z);
    const auto tail = [](const std::vector<double>& t, int j) {
      if (j < 0) j = 0;
      return j < static_cast<int>(t.size()) ? t[j] : 0.0;
    };
    for (int j = 0; j < levels; ++j) {
      const double term = 2.0 * tail(ts, j - 1) * at(z, j - 1) +
                          (2.0 * at(rho, j - 1) - 2.0 * tail(ts, j)) * at(z, j) +
                          (2.0 * at(rho, j - 1) - 2.0 * at(rho, j)) * tail(tz, j + 1);
      du_int[j] += w[k] * term;
      double dv;
      if (j == 0 && c == Convention::MassConserving)
        dv = at(z, 1);
      else
        dv = at(z, j + 1) - at(z, j);
      dv_int[j] += w[k] * dv;
    }
  }
  for (int j = 0; j < levels; ++j) dz[j] = at(z_path.back(), j) - at(z_path.front(), j);

  const auto& init = path.states.front();
  const auto& term = path.states.back();
  LimitLawSample s;
  for (int j = 0; j < levels; ++j) {
    const double drho = at(term, j) - at(init, j);
    const double u = ubar[j], v = vbar[j];
    const double du = du_int[j], dv = dv_int[j];
    s.I += coef.a22 * (drho * du + dz[j] * u) + 2.0 * coef.b1 * v * dv -
           coef.b2 * (v * du + u * dv) - coef.a12 * (drho * dv + dz[j] * v);
    s.J += coef.a11 * (drho * dv + dz[j] * v) + 2.0 * coef.b2 * u * du -
           coef.b1 * (v * du + u * dv) - coef.a12 * (drho * du + dz[j] * u);
    s.K += 2.0 * (-coef.a11 * v * dv - coef.a22 * u * du + coef.a12 * (v * du + u * dv));
  }
  const double det = coef.det();
  s.limit[0] = (det * s.I + (coef.a22 * coef.b1 - coef.a12 * coef.b2) * s.K) / (det * det);
  s.limit[1] = (det * s.J + (coef.a11 * coef.b2 - coef.a12 * coef.b1) * s.K) / (det * det);
  return s;
}

}  // namespace mfq
