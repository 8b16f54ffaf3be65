#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfq/estimator.hpp"
#include "mfq/params.hpp"
#include "mfq/stats.hpp"

namespace mfq {

struct GridCell {
  std::int64_t N = 0;
  int m = 0;
};

struct ExperimentGrid {
  std::vector<GridCell> cells;
  int replications = 100;
  Params params;  // true theta*
  Convention convention = Convention::MassConserving;
  EstimatorMethod method = EstimatorMethod::Endpoint;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_dir;
  int workers = 1;
  bool resume = false;

  void validate() const;
};

struct CellResult {
  GridCell cell;
  std::vector<EstimateReport> reports;  // replication order
  int n_ok = 0;
  int n_illposed = 0;
  MomentSummary lambda_moments;   // over well-posed replications
  MomentSummary nu_moments;
  MomentSummary norm_lambda;      // normalized errors sqrt(N)(theta_hat - theta*)
  MomentSummary norm_nu;
  double ks_stat_lambda = 0, ks_p_lambda = 0;
  double ks_stat_nu = 0, ks_p_nu = 0;
  long long total_events = 0;
  double wall_seconds = 0;
  bool loaded_from_disk = false;
};

/// Per-coordinate normalized error samples sqrt(N)(theta_hat - theta*) over
/// the well-posed replications of a cell.
std::pair<std::vector<double>, std::vector<double>> normalized_errors(const CellResult& cell,
                                                                      double lambda_star,
                                                                      double nu_star);

/// Runs simulate -> estimate over the grid. Replication r of cell i uses the
/// RNG stream (i << 32) | r of base_seed, so outputs are identical for any
/// worker count. When `resume` is set, cells with a valid summary.json are
/// reloaded instead of re-run. A cell aborts if more than half of its
/// replications are ill-posed. Pass an empty output_dir to skip file output.
std::vector<CellResult> run_grid(const ExperimentGrid& grid);

/// Directory name for one cell, e.g. "cell_N3000_m30000".
std::string cell_dir_name(const GridCell& cell);

/// Freedman-Diaconis histogram bins; returns (edges, counts).
std::pair<std::vector<double>, std::vector<long>> histogram_bins(std::span<const double> samples);

}  // namespace mfq
