#pragma once

#include <functional>
#include <vector>

#include "mfq/params.hpp"
#include "mfq/simplex.hpp"

namespace mfq {

/// Truncated solution of the limit ODE rho' = F(rho) on a time grid.
struct MeanFieldPath {
  std::vector<double> grid;                 // strictly increasing, grid[0] == 0
  std::vector<std::vector<double>> states;  // one vector of size truncation+1 per grid time
  Params params;
  Convention convention = Convention::MassConserving;
  int truncation = 0;
  long clip_events = 0;  // renormalizations logged by the integrator

  double horizon() const { return grid.back(); }
};

/// Fixed-step RK4 with h = min(grid spacing, 0.01/(lambda+nu)); grid times are
/// hit exactly by step splitting. Negative undershoots are clipped at 0 and
/// the state renormalized only when the drift from 1 exceeds 1e-12 (counted
/// in clip_events). Throws TruncationOverflow when mass at level J exceeds 1e-9.
MeanFieldPath solve_ode(const Params& p, std::vector<double> rho0,
                        std::vector<double> grid, int J, Convention c);

/// Uniform grid with `points` times covering [0, T].
std::vector<double> uniform_grid(double T, int points);

/// Composite Simpson weights for a uniform grid (3/8 rule on the last three
/// intervals when their count is odd). Throws on fewer than 3 points.
std::vector<double> simpson_weights(const std::vector<double>& grid);

/// integral_0^T f(rho(s), j) ds per level j = 0..truncation+1, Simpson on the
/// path grid.
std::vector<double> time_average(const MeanFieldPath& path,
                                 const std::function<double(const std::vector<double>&, int)>& f);

/// Convenience wrappers for the two regressor families.
std::vector<double> time_average_u(const MeanFieldPath& path);
std::vector<double> time_average_v(const MeanFieldPath& path);

}  // namespace mfq
