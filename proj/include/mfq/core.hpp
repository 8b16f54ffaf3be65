#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mfq/params.hpp"
#include "mfq/simplex.hpp"

namespace mfq {

// Arrival-side regressor U_j(x) = 2 x_{j-1} S_j - 2 x_j S_{j+1} + x_{j-1}^2 - x_j^2,
// with S_j the tail sum and x_{-1} = 0. Vanishes for j >= support + 2.
double u_regressor(std::span<const double> x, std::span<const double> tails, int j);
double u_regressor(std::span<const double> x, int j);

// Service-side regressor V_j(x); the convention flag only affects j = 0.
double v_regressor(std::span<const double> x, int j, Convention c);

// Partial derivative dU_j/dx_l (four-case formula).
double du_regressor(std::span<const double> x, std::span<const double> tails, int j, int l);

// Partial derivative dV_j/dx_l; MassConserving zeroes dV_0/dx_0.
double dv_regressor(int j, int l, Convention c);

// Mean-field drift F(x) over levels 0..n (input has levels 0..n-1, arrivals
// reach one level past the support). L == 2 uses the U/V form; larger L the
// binomial-sum form.
std::vector<double> drift(std::span<const double> x, const Params& p, Convention c);

// Binomial-sum route for any L >= 2, kept as an independent algebraic path
// against the U/V specialization.
std::vector<double> drift_binomial(std::span<const double> x, const Params& p, Convention c);

// Directional derivative G(x, s) of the drift at s along x (L = 2 only).
std::vector<double> g_linearized(std::span<const double> x, std::span<const double> s,
                                 const Params& p, Convention c);

// Diffusion operator Phi of the fluctuation SDE at state s (L = 2 only).
// Symmetric, zero row sums, PSD.
Eigen::MatrixXd phi_matrix(std::span<const double> s, const Params& p, int dim);

// Jacobian B of the drift at s: B(j,l) = lambda*dU_j/dx_l + nu*dV_j/dx_l.
Eigen::MatrixXd drift_jacobian(std::span<const double> s, const Params& p, Convention c,
                               int dim);

// Lower-Hessenberg matrix C(t) with C x = G(x, s) for zero-sum x. Case table:
// l <= j-2: -2*lambda*(s_{j-1} - s_j); l = j-1: 2*lambda*(S_j + s_j);
// l = j: 2*lambda*(s_j - S_j) - nu; l = j+1: nu; l >= j+2: 0.
Eigen::MatrixXd c_matrix(std::span<const double> s, const Params& p, Convention c, int dim);

// Stationary point of the drift: tail sums S_j = (lambda/nu)^((L^j - 1)/(L - 1)).
std::vector<double> fixed_point(const Params& p, int J);

// Smallest J with stationary tail (lambda/nu)^((L^J-1)/(L-1)) < 1e-14,
// never below min_level + 2.
int suggested_truncation(const Params& p, int min_level = 0);

}  // namespace mfq
