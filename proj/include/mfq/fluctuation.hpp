#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "mfq/estimator.hpp"
#include "mfq/meanfield.hpp"
#include "mfq/params.hpp"

namespace mfq {

/// Second-moment (Lyapunov) propagation of the fluctuation SDE:
/// Sigma' = B(t) Sigma + Sigma B(t)^T + Phi(rho(t)), integrated jointly with
/// rho by RK4 under the mean-field step policy. Returns Sigma(T).
Eigen::MatrixXd propagate_covariance(const MeanFieldPath& path, const Params& p,
                                     const Eigen::MatrixXd& sigma0);

/// Euler-Maruyama sampler for the fluctuation process on a mean-field path
/// grid. The symmetric PSD square roots of Phi(rho(t)) are precomputed per
/// grid point (eigendecomposition, eigenvalues below 1e-12 clamped to 0) so
/// that many paths can be drawn cheaply.
class FluctuationSampler {
 public:
  FluctuationSampler(const MeanFieldPath& path, const Params& p);

  /// One trajectory of Z on the path grid; Z[k] has truncation+1 levels.
  std::vector<std::vector<double>> sample(const std::vector<double>& z0,
                                          std::uint64_t seed) const;

  const MeanFieldPath& path() const { return *path_; }

 private:
  const MeanFieldPath* path_;
  Params params_;
  std::vector<Eigen::MatrixXd> noise_roots_;  // sqrt(Phi) per grid point
};

/// l1 residual of C(t) x - G(x, rho(t)) at a grid index; the zero-sum
/// representation check.
double c_matrix_residual(const MeanFieldPath& path, const Params& p,
                         const std::vector<double>& x, std::size_t t_index);

/// One draw of the estimator's limit law functionals.
struct LimitLawSample {
  double I = 0, J = 0, K = 0;
  std::array<double, 2> limit{0, 0};
};

/// Assembles (I, J, K) and the limit vector from a sampled fluctuation
/// trajectory on the same grid as `path`, using exact-limit coefficients.
LimitLawSample limit_law_sample(const MeanFieldPath& path, const Params& p,
                                const std::vector<std::vector<double>>& z_path);

}  // namespace mfq
