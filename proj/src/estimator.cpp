#include "mfq/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "mfq/core.hpp"

namespace mfq {

namespace {

LseCoefficients assemble(const std::vector<double>& ubar, const std::vector<double>& vbar,
                         const std::vector<double>& initial, const std::vector<double>& terminal) {
  LseCoefficients c;
  c.levels_used = static_cast<int>(ubar.size());
  const auto level = [](const std::vector<double>& v, int j) {
    return j < static_cast<int>(v.size()) ? v[j] : 0.0;
  };
  for (int j = 0; j < c.levels_used; ++j) {
    const double u = ubar[j];
    const double v = vbar[j];
    const double dr = level(terminal, j) - level(initial, j);
    c.a11 += u * u;
    c.a12 += u * v;
    c.a22 += v * v;
    c.b1 += dr * u;
    c.b2 += dr * v;
  }
  return c;
}

}  // namespace

LseCoefficients coefficients_from_observations(const ObservationSet& obs, Convention c) {
  if (obs.m < 1) throw std::invalid_argument("observation set is empty");
  int max_support = 0;
  const auto support = [&](const std::vector<double>& v) {
    for (int j = static_cast<int>(v.size()); j-- > 0;)
      if (v[j] != 0.0) return j;
    return 0;
  };
  max_support = support(obs.initial);
  for (const auto& meas : obs.measures) max_support = std::max(max_support, support(meas));
  const int levels = max_support + 2;  // U, V vanish beyond support + 1

  std::vector<double> ubar(levels, 0.0), vbar(levels, 0.0);
  for (const auto& meas : obs.measures) {
    const auto s = tail_sums(meas);
    for (int j = 0; j < levels; ++j) {
      ubar[j] += u_regressor(meas, s, j);
      vbar[j] += v_regressor(meas, j, c);
    }
  }
  const double w = obs.T / obs.m;
  for (auto& u : ubar) u *= w;
  for (auto& v : vbar) v *= w;
  return assemble(ubar, vbar, obs.initial, obs.terminal());
}

LseCoefficients coefficients_from_increments(const ObservationSet& obs, Convention c) {
  if (obs.m < 1) throw std::invalid_argument("observation set is empty");
  int max_support = 0;
  const auto support = [&](const std::vector<double>& v) {
    for (int j = static_cast<int>(v.size()); j-- > 0;)
      if (v[j] != 0.0) return j;
    return 0;
  };
  max_support = support(obs.initial);
  for (const auto& meas : obs.measures) max_support = std::max(max_support, support(meas));
  const int levels = max_support + 2;

  LseCoefficients coef;
  coef.levels_used = levels;
  const double dt = obs.T / obs.m;
  const auto level = [](const std::vector<double>& v, int j) {
    return j < static_cast<int>(v.size()) ? v[j] : 0.0;
  };
  const std::vector<double>* prev = &obs.initial;
  for (int k = 0; k < obs.m; ++k) {
    const auto& cur = obs.measures[k];
    const auto s = tail_sums(*prev);
    for (int j = 0; j < levels; ++j) {
      const double u = u_regressor(*prev, s, j);
      const double v = v_regressor(*prev, j, c);
      const double d = level(cur, j) - level(*prev, j);
      coef.a11 += dt * dt * u * u;
      coef.a12 += dt * dt * u * v;
      coef.a22 += dt * dt * v * v;
      coef.b1 += dt * d * u;
      coef.b2 += dt * d * v;
    }
    prev = &cur;
  }
  return coef;
}

LseCoefficients coefficients_from_path(const MeanFieldPath& path) {
  return assemble(time_average_u(path), time_average_v(path), path.states.front(),
                  path.states.back());
}

std::pair<double, double> solve_lse(const LseCoefficients& c, double det_threshold) {
  const double det = c.det();
  if (!(det > det_threshold * std::max(c.a11 * c.a22, 1e-300))) {
    WellPosedness wp;
    wp.det_ratio = c.det_ratio();
    throw IllPosedError(wp, c);
  }
  return {(c.a22 * c.b1 - c.a12 * c.b2) / det, (c.a11 * c.b2 - c.a12 * c.b1) / det};
}

namespace {

WellPosedness diagnostics_from_averages(double r0, double r1, double r2,
                                        const LseCoefficients& c) {
  WellPosedness wp;
  wp.int_rho0 = r0;
  wp.int_rho1 = r1;
  wp.int_rho2 = r2;
  wp.cond_a = r1 > r0 && r0 > 0;
  wp.cond_b = r0 > r1 && r1 > r2 && r2 > 0;
  wp.det_ratio = c.det_ratio();
  return wp;
}

}  // namespace

WellPosedness diagnostics_from_observations(const ObservationSet& obs,
                                            const LseCoefficients& c) {
  double r0 = 0, r1 = 0, r2 = 0;
  const auto level = [](const std::vector<double>& v, int j) {
    return j < static_cast<int>(v.size()) ? v[j] : 0.0;
  };
  for (const auto& meas : obs.measures) {
    r0 += level(meas, 0);
    r1 += level(meas, 1);
    r2 += level(meas, 2);
  }
  const double w = obs.T / obs.m;
  return diagnostics_from_averages(r0 * w, r1 * w, r2 * w, c);
}

WellPosedness diagnostics_from_path(const MeanFieldPath& path, const LseCoefficients& c) {
  const auto avg = time_average(
      path, [](const std::vector<double>& x, int j) {
        return j < static_cast<int>(x.size()) ? x[j] : 0.0;
      });
  return diagnostics_from_averages(avg[0], avg[1], avg[2], c);
}

EstimateReport estimate(const ObservationSet& obs, Convention c, double det_threshold,
                        EstimatorMethod method) {
  EstimateReport report;
  report.convention = c;
  report.N = obs.N;
  report.m = obs.m;
  report.T = obs.T;
  report.seed = obs.seed;
  report.coefficients = method == EstimatorMethod::Endpoint
                            ? coefficients_from_observations(obs, c)
                            : coefficients_from_increments(obs, c);
  report.wellposed = diagnostics_from_observations(obs, report.coefficients);
  try {
    const auto [lam, nu] = solve_lse(report.coefficients, det_threshold);
    report.lambda_hat = lam;
    report.nu_hat = nu;
  } catch (const IllPosedError&) {
    report.ill_posed = true;
  }
  return report;
}

}  // namespace mfq
