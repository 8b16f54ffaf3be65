#include "mfq/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "mfq/io.hpp"
#include "mfq/rng.hpp"
#include "mfq/simulator.hpp"

namespace mfq {

namespace {

using nlohmann::json;

json summary_to_json(const CellResult& r, const ExperimentGrid& grid) {
  const auto moments = [](const MomentSummary& m) {
    return json{{"mean", m.mean}, {"sd", m.sd}, {"mse", m.mse}, {"mean_error", m.mean_error}};
  };
  const auto normalized = [](const MomentSummary& m, double ks_stat, double ks_p) {
    return json{{"mean", m.mean},     {"var", m.sd * m.sd}, {"skew", m.skewness},
                {"kurt", m.kurtosis}, {"ks_stat", ks_stat}, {"ks_p", ks_p}};
  };
  return json{
      {"cell", {{"N", r.cell.N}, {"m", r.cell.m}}},
      {"n_ok", r.n_ok},
      {"n_illposed", r.n_illposed},
      {"lambda", moments(r.lambda_moments)},
      {"nu", moments(r.nu_moments)},
      {"normalized",
       {{"lambda", normalized(r.norm_lambda, r.ks_stat_lambda, r.ks_p_lambda)},
        {"nu", normalized(r.norm_nu, r.ks_stat_nu, r.ks_p_nu)}}},
      {"config",
       {{"lambda_star", grid.params.lambda},
        {"nu_star", grid.params.nu},
        {"L", grid.params.L},
        {"T", grid.params.T},
        {"convention", to_string(grid.convention)},
        {"method", to_string(grid.method)},
        {"base_seed", grid.base_seed},
        {"replications", grid.replications}}},
      {"telemetry", {{"total_events", r.total_events}, {"wall_seconds", r.wall_seconds}}},
  };
}

bool load_summary(const std::filesystem::path& dir, CellResult& out,
                  const ExperimentGrid& grid) {
  std::ifstream in(dir / "summary.json");
  if (!in) return false;
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception&) {
    return false;
  }
  try {
    if (j.at("config").at("base_seed").get<std::uint64_t>() != grid.base_seed ||
        j.at("config").at("replications").get<int>() != grid.replications ||
        j.at("config").at("method").get<std::string>() != to_string(grid.method))
      return false;
    out.cell.N = j.at("cell").at("N").get<std::int64_t>();
    out.cell.m = j.at("cell").at("m").get<int>();
    out.n_ok = j.at("n_ok").get<int>();
    out.n_illposed = j.at("n_illposed").get<int>();
    const auto read_moments = [](const json& m, MomentSummary& s) {
      s.mean = m.at("mean").get<double>();
      s.sd = m.at("sd").get<double>();
      s.mse = m.at("mse").get<double>();
      s.mean_error = m.at("mean_error").get<double>();
    };
    read_moments(j.at("lambda"), out.lambda_moments);
    read_moments(j.at("nu"), out.nu_moments);
    const auto read_norm = [](const json& m, MomentSummary& s, double& stat, double& p) {
      s.mean = m.at("mean").get<double>();
      s.sd = std::sqrt(m.at("var").get<double>());
      s.skewness = m.at("skew").get<double>();
      s.kurtosis = m.at("kurt").get<double>();
      stat = m.at("ks_stat").get<double>();
      p = m.at("ks_p").get<double>();
    };
    read_norm(j.at("normalized").at("lambda"), out.norm_lambda, out.ks_stat_lambda,
              out.ks_p_lambda);
    read_norm(j.at("normalized").at("nu"), out.norm_nu, out.ks_stat_nu, out.ks_p_nu);
    out.total_events = j.at("telemetry").at("total_events").get<long long>();
  } catch (const json::exception&) {
    return false;
  }
  out.loaded_from_disk = true;
  return true;
}

void write_cell_outputs(const std::filesystem::path& dir, const CellResult& r,
                        const ExperimentGrid& grid,
                        const std::vector<double>& err_lambda,
                        const std::vector<double>& err_nu) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "reports.jsonl");
    for (const auto& report : r.reports) out << io::report_to_json(report) << "\n";
  }
  {
    std::ofstream out(dir / "normalized_errors.csv");
    out << "replication,err_lambda,err_nu\n";
    char buf[128];
    for (std::size_t i = 0; i < err_lambda.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, err_lambda[i], err_nu[i]);
      out << buf;
    }
  }
  {
    std::ofstream out(dir / "histogram_bins.csv");
    out << "coordinate,bin_left,bin_right,count\n";
    const auto dump = [&](const char* name, std::span<const double> samples) {
      if (samples.size() < 2) return;
      const auto [edges, counts] = histogram_bins(samples);
      char buf[160];
      for (std::size_t b = 0; b < counts.size(); ++b) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%ld\n", name, edges[b], edges[b + 1],
                      counts[b]);
        out << buf;
      }
    };
    dump("lambda", err_lambda);
    dump("nu", err_nu);
  }
  {
    std::ofstream out(dir / "summary.json");
    out << summary_to_json(r, grid).dump(2) << "\n";
  }
}

}  // namespace

void ExperimentGrid::validate() const {
  params.validate();
  if (replications < 2) throw std::invalid_argument("replications must be >= 2");
  if (cells.empty()) throw std::invalid_argument("grid has no cells");
  for (const auto& c : cells)
    if (c.N < 1 || c.m < 1) throw std::invalid_argument("cells must have positive N, m");
}

std::string cell_dir_name(const GridCell& cell) {
  return "cell_N" + std::to_string(cell.N) + "_m" + std::to_string(cell.m);
}

std::pair<std::vector<double>, std::vector<double>> normalized_errors(const CellResult& cell,
                                                                      double lambda_star,
                                                                      double nu_star) {
  std::vector<double> el, en;
  const double root_n = std::sqrt(static_cast<double>(cell.cell.N));
  for (const auto& r : cell.reports) {
    if (r.ill_posed) continue;
    el.push_back(root_n * (*r.lambda_hat - lambda_star));
    en.push_back(root_n * (*r.nu_hat - nu_star));
  }
  return {std::move(el), std::move(en)};
}

std::pair<std::vector<double>, std::vector<long>> histogram_bins(
    std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n < 2) throw std::invalid_argument("histogram needs at least 2 samples");
  const double q1 = sorted[(n - 1) / 4];
  const double q3 = sorted[(3 * (n - 1)) / 4];
  const double iqr = q3 - q1;
  const double lo = sorted.front(), hi = sorted.back();
  double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
  if (width <= 0) width = (hi - lo > 0 ? hi - lo : 1.0);
  const int bins = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));

  std::vector<double> edges(bins + 1);
  for (int b = 0; b <= bins; ++b) edges[b] = lo + (hi - lo) * b / bins;
  std::vector<long> counts(bins, 0);
  for (double x : sorted) {
    int b = hi > lo ? static_cast<int>((x - lo) / (hi - lo) * bins) : 0;
    counts[std::clamp(b, 0, bins - 1)]++;
  }
  return {std::move(edges), std::move(counts)};
}

std::vector<CellResult> run_grid(const ExperimentGrid& grid) {
  grid.validate();
  std::vector<CellResult> results;
  results.reserve(grid.cells.size());

  for (std::size_t ci = 0; ci < grid.cells.size(); ++ci) {
    const GridCell cell = grid.cells[ci];
    CellResult result;
    result.cell = cell;

    const auto dir = grid.output_dir.empty()
                         ? std::filesystem::path{}
                         : grid.output_dir / cell_dir_name(cell);
    if (grid.resume && !dir.empty() && load_summary(dir, result, grid)) {
      results.push_back(std::move(result));
      continue;
    }

    const auto t0 = std::chrono::steady_clock::now();
    result.reports.resize(grid.replications);
    std::atomic<int> next{0};
    const int workers = std::max(1, grid.workers);
    std::atomic<long long> events{0};

    const auto worker = [&] {
      Params p = grid.params;
      const StateCounts initial = StateCounts::all_empty(cell.N);
      for (int r = next.fetch_add(1); r < grid.replications; r = next.fetch_add(1)) {
        const std::uint64_t stream =
            (static_cast<std::uint64_t>(ci) << 32) | static_cast<std::uint64_t>(r);
        const std::uint64_t seed = Rng::derive_stream(grid.base_seed, stream);
        auto obs = simulate(p, cell.N, initial, cell.m, seed);
        events.fetch_add(obs.events);
        result.reports[r] = estimate(obs, grid.convention, kDefaultDetThreshold, grid.method);
      }
    };
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    result.total_events = events.load();
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<double> lams, nus;
    for (const auto& r : result.reports) {
      if (r.ill_posed) {
        ++result.n_illposed;
      } else {
        ++result.n_ok;
        lams.push_back(*r.lambda_hat);
        nus.push_back(*r.nu_hat);
      }
    }
    if (result.n_illposed * 2 > grid.replications)
      throw NumericalError("cell " + cell_dir_name(cell) +
                           " aborted: more than half of replications ill-posed");

    result.lambda_moments = moment_summary(lams, grid.params.lambda);
    result.nu_moments = moment_summary(nus, grid.params.nu);
    const auto [el, en] = normalized_errors(result, grid.params.lambda, grid.params.nu);
    result.norm_lambda = moment_summary(el, 0.0);
    result.norm_nu = moment_summary(en, 0.0);
    if (static_cast<int>(el.size()) >= 5) {
      std::tie(result.ks_stat_lambda, result.ks_p_lambda) = ks_normality(el);
      std::tie(result.ks_stat_nu, result.ks_p_nu) = ks_normality(en);
    }

    if (!dir.empty()) write_cell_outputs(dir, result, grid, el, en);
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace mfq
