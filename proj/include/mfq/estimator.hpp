#pragma once

#include <optional>
#include <utility>

#include "mfq/meanfield.hpp"
#include "mfq/params.hpp"
#include "mfq/simulator.hpp"

namespace mfq {

/// Normal-equation coefficients of the least-squares system. a's carry units
/// of time^2, b's of time.
struct LseCoefficients {
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  int levels_used = 0;

  double det() const { return a11 * a22 - a12 * a12; }
  double det_ratio() const {
    const double scale = a11 * a22;
    return scale > 0 ? det() / scale : 0.0;
  }
};

/// Well-posedness diagnostics on time-averaged occupancies.
struct WellPosedness {
  double int_rho0 = 0, int_rho1 = 0, int_rho2 = 0;
  bool cond_a = false;  // int rho1 > int rho0 > 0
  bool cond_b = false;  // int rho0 > int rho1 > int rho2 > 0
  double det_ratio = 0;
};

struct IllPosedError : std::runtime_error {
  WellPosedness diagnostics;
  LseCoefficients coefficients;
  IllPosedError(const WellPosedness& wp, const LseCoefficients& c)
      : std::runtime_error("normal equations ill-posed (determinant below threshold)"),
        diagnostics(wp),
        coefficients(c) {}
};

struct EstimateReport {
  std::optional<double> lambda_hat;
  std::optional<double> nu_hat;
  LseCoefficients coefficients;
  WellPosedness wellposed;
  bool ill_posed = false;
  Convention convention = Convention::MassConserving;
  std::int64_t N = 0;
  int m = 0;
  double T = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultDetThreshold = 1e-10;  // relative to a11*a22

/// Endpoint: b from the single whole-interval increment rho(T) - rho(0)
/// against Riemann sums of U, V; the construction the asymptotic limit law
/// analyzes. Increment: the per-observation Euler contrast
/// sum_k ||rho(t_k) - rho(t_{k-1}) - dt (lambda U + nu V)||^2 with
/// left-endpoint regressors. The endpoint design degenerates once the path
/// reaches equilibrium (U and V become collinear there), so its errors are
/// heavy-tailed for long horizons; prefer the increment form in practice.
enum class EstimatorMethod { Endpoint, Increment };

inline const char* to_string(EstimatorMethod m) {
  return m == EstimatorMethod::Endpoint ? "endpoint" : "increment";
}

inline EstimatorMethod estimator_method_from_string(const std::string& s) {
  if (s == "endpoint") return EstimatorMethod::Endpoint;
  if (s == "increment") return EstimatorMethod::Increment;
  throw std::invalid_argument("unknown estimator method: " + s);
}

/// Right-endpoint Riemann-sum coefficients from observed empirical measures.
/// Level sums run to (max observed support)+1, beyond which U and V vanish.
LseCoefficients coefficients_from_observations(const ObservationSet& obs, Convention c);

/// Increment-contrast coefficients (EstimatorMethod::Increment).
LseCoefficients coefficients_from_increments(const ObservationSet& obs, Convention c);

/// Exact-limit coefficients from a mean-field path (Simpson quadrature);
/// the oracle route for the Riemann-sum coefficients.
LseCoefficients coefficients_from_path(const MeanFieldPath& path);

/// Closed-form 2x2 solve; throws IllPosedError when
/// det <= threshold * max(a11*a22, eps).
std::pair<double, double> solve_lse(const LseCoefficients& c,
                                    double det_threshold = kDefaultDetThreshold);

WellPosedness diagnostics_from_observations(const ObservationSet& obs,
                                            const LseCoefficients& c);
WellPosedness diagnostics_from_path(const MeanFieldPath& path, const LseCoefficients& c);

/// Full pipeline: coefficients + diagnostics + solve. Ill-posedness is
/// reported as a flag, never thrown.
EstimateReport estimate(const ObservationSet& obs, Convention c,
                        double det_threshold = kDefaultDetThreshold,
                        EstimatorMethod method = EstimatorMethod::Endpoint);

}  // namespace mfq
