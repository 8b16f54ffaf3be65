// mfq: simulator and inference pipeline for the power-of-L-choices model.
//
// Subcommands: simulate, ode, estimate, fluctuation, experiment, validate.
// Exit codes: 0 ok, 2 usage/parse error, 3 ill-posed estimate, 4 numerical
// failure. Every run logs its fully resolved config as a JSON line on stderr.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mfq/core.hpp"
#include "mfq/estimator.hpp"
#include "mfq/experiments.hpp"
#include "mfq/fluctuation.hpp"
#include "mfq/io.hpp"
#include "mfq/meanfield.hpp"
#include "mfq/rng.hpp"
#include "mfq/simulator.hpp"
#include "mfq/stats.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIllPosed = 3;
constexpr int kExitNumerical = 4;

void log_config(const std::string& cmd, const json& cfg) {
  json line = {{"command", cmd}, {"config", cfg}};
  std::fprintf(stderr, "# %s\n", line.dump().c_str());
}

int env_workers() {
  const char* raw = std::getenv("MFQI_WORKERS");
  if (!raw) return 1;
  const int w = std::atoi(raw);
  return w >= 1 ? w : 1;
}

struct SimulateOpts {
  mfq::Params params;
  std::int64_t N = 100;
  int m = 1000;
  std::uint64_t seed = 0;
  std::string convention = "mass-conserving";
  std::string out = "observations.csv";
};

int cmd_simulate(const SimulateOpts& o) {
  log_config("simulate", {{"lambda", o.params.lambda},
                          {"nu", o.params.nu},
                          {"L", o.params.L},
                          {"T", o.params.T},
                          {"N", o.N},
                          {"m", o.m},
                          {"seed", o.seed},
                          {"convention", o.convention},
                          {"out", o.out}});
  auto obs = mfq::simulate(o.params, o.N, mfq::StateCounts::all_empty(o.N), o.m, o.seed);
  mfq::io::write_observations(obs, o.out, mfq::convention_from_string(o.convention));
  std::fprintf(stderr, "# wrote %s (%lld events)\n", o.out.c_str(), obs.events);
  return kExitOk;
}

struct OdeOpts {
  mfq::Params params;
  int J = -1;
  int points = 1001;
  std::string convention = "mass-conserving";
  std::string out = "path.csv";
};

int cmd_ode(const OdeOpts& o) {
  const auto conv = mfq::convention_from_string(o.convention);
  const int J = o.J > 0 ? o.J : mfq::suggested_truncation(o.params);
  log_config("ode", {{"lambda", o.params.lambda},
                     {"nu", o.params.nu},
                     {"L", o.params.L},
                     {"T", o.params.T},
                     {"J", J},
                     {"points", o.points},
                     {"convention", o.convention},
                     {"out", o.out}});
  std::vector<double> rho0(J + 1, 0.0);
  rho0[0] = 1.0;
  auto path = mfq::solve_ode(o.params, rho0, mfq::uniform_grid(o.params.T, o.points), J, conv);
  mfq::io::write_path(path, o.out);
  return kExitOk;
}

struct EstimateOpts {
  std::string input;
  std::string convention;  // empty: use the sidecar's
  std::string method = "endpoint";
  double det_threshold = mfq::kDefaultDetThreshold;
};

int cmd_estimate(const EstimateOpts& o) {
  mfq::Convention conv = mfq::Convention::MassConserving;
  auto obs = mfq::io::read_observations(o.input, &conv);
  if (!o.convention.empty()) conv = mfq::convention_from_string(o.convention);
  log_config("estimate", {{"input", o.input},
                          {"convention", mfq::to_string(conv)},
                          {"method", o.method},
                          {"det_threshold", o.det_threshold}});
  const auto report = mfq::estimate(obs, conv, o.det_threshold,
                                    mfq::estimator_method_from_string(o.method));
  std::printf("%s\n", mfq::io::report_to_json(report).c_str());
  return report.ill_posed ? kExitIllPosed : kExitOk;
}

struct FluctuationOpts {
  mfq::Params params;
  int J = -1;
  int points = 1001;
  std::string convention = "mass-conserving";
  std::uint64_t seed = 0;
  int samples = 0;
  std::string cov_out;
  std::string samples_out;
};

int cmd_fluctuation(const FluctuationOpts& o) {
  const auto conv = mfq::convention_from_string(o.convention);
  const int J = o.J > 0 ? o.J : mfq::suggested_truncation(o.params);
  log_config("fluctuation", {{"lambda", o.params.lambda},
                             {"nu", o.params.nu},
                             {"L", o.params.L},
                             {"T", o.params.T},
                             {"J", J},
                             {"points", o.points},
                             {"convention", o.convention},
                             {"seed", o.seed},
                             {"samples", o.samples},
                             {"cov_out", o.cov_out},
                             {"samples_out", o.samples_out}});
  std::vector<double> rho0(J + 1, 0.0);
  rho0[0] = 1.0;
  const auto path =
      mfq::solve_ode(o.params, rho0, mfq::uniform_grid(o.params.T, o.points), J, conv);
  const int dim = J + 1;

  if (!o.cov_out.empty()) {
    std::FILE* f = std::fopen(o.cov_out.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + o.cov_out);
    std::fprintf(f, "t,i,j,sigma\n");
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(dim, dim);
    // Step grid point by grid point so the full Sigma(t) history is emitted.
    for (std::size_t k = 1; k < path.grid.size(); ++k) {
      mfq::MeanFieldPath seg;
      seg.grid = {path.grid[k - 1], path.grid[k]};
      seg.states = {path.states[k - 1], path.states[k]};
      seg.params = path.params;
      seg.convention = path.convention;
      seg.truncation = path.truncation;
      sigma = mfq::propagate_covariance(seg, o.params, sigma);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          if (sigma(i, j) != 0.0)
            std::fprintf(f, "%.17g,%d,%d,%.17g\n", path.grid[k], i, j, sigma(i, j));
    }
    std::fclose(f);
  }

  if (o.samples > 0) {
    if (o.samples_out.empty()) throw std::runtime_error("--samples requires --samples-out");
    std::FILE* f = std::fopen(o.samples_out.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + o.samples_out);
    std::fprintf(f, "sample,I,J,K,lim1,lim2\n");
    const mfq::FluctuationSampler sampler(path, o.params);
    const std::vector<double> z0(dim, 0.0);
    for (int s = 0; s < o.samples; ++s) {
      const auto z = sampler.sample(z0, mfq::Rng::derive_stream(o.seed, s));
      const auto draw = mfq::limit_law_sample(path, o.params, z);
      std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", s, draw.I, draw.J, draw.K,
                   draw.limit[0], draw.limit[1]);
    }
    std::fclose(f);
  }
  return kExitOk;
}

struct ExperimentOpts {
  mfq::Params params;
  std::vector<std::string> cells;  // "N:m"
  int replications = 100;
  std::string convention = "mass-conserving";
  std::string method = "endpoint";
  std::uint64_t seed = 0;
  std::string out_dir = "experiment";
  int workers = env_workers();
  bool resume = false;
};

int cmd_experiment(const ExperimentOpts& o) {
  mfq::ExperimentGrid grid;
  for (const auto& spec : o.cells) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("--cell", "expected N:m, got '" + spec + "'");
    mfq::GridCell cell;
    cell.N = std::stoll(spec.substr(0, colon));
    cell.m = std::stoi(spec.substr(colon + 1));
    grid.cells.push_back(cell);
  }
  grid.replications = o.replications;
  grid.params = o.params;
  grid.convention = mfq::convention_from_string(o.convention);
  grid.method = mfq::estimator_method_from_string(o.method);
  grid.base_seed = o.seed;
  grid.output_dir = o.out_dir;
  grid.workers = o.workers;
  grid.resume = o.resume;
  log_config("experiment", {{"lambda", o.params.lambda},
                            {"nu", o.params.nu},
                            {"L", o.params.L},
                            {"T", o.params.T},
                            {"cells", o.cells},
                            {"replications", o.replications},
                            {"convention", o.convention},
                            {"method", o.method},
                            {"base_seed", o.seed},
                            {"out_dir", o.out_dir},
                            {"workers", o.workers},
                            {"resume", o.resume}});
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  const auto results = mfq::run_grid(grid);
  for (const auto& r : results)
    std::printf("%s: n_ok=%d n_illposed=%d lambda_mean=%.4f nu_mean=%.4f%s\n",
                mfq::cell_dir_name(r.cell).c_str(), r.n_ok, r.n_illposed,
                r.lambda_moments.mean, r.nu_moments.mean,
                r.loaded_from_disk ? " (resumed)" : "");
  return kExitOk;
}

int cmd_validate() {
  log_config("validate", json::object());
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::printf("%-44s %s\n", name, ok ? "PASS" : "FAIL");
    if (!ok) ++failures;
  };

  mfq::Params p;  // (0.5, 1, 2, 10)
  const auto conv = mfq::Convention::MassConserving;

  {
    const auto x = mfq::fixed_point(p, 20);
    const auto f = mfq::drift(x, p, conv);
    double r = 0;
    for (double v : f) r = std::max(r, std::abs(v));
    check("fixed-point residual < 1e-8", r < 1e-8);
  }
  {
    mfq::Rng rng(11);
    std::vector<double> x(8);
    double sum = 0;
    for (auto& v : x) sum += (v = rng.uniform());
    for (auto& v : x) v /= sum;
    const auto a = mfq::drift(x, p, conv);
    const auto b = mfq::drift_binomial(x, p, conv);
    double d = 0;
    for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
    check("drift U/V vs binomial route < 1e-13", d < 1e-13);
    double mass = 0;
    for (double v : a) mass += v;
    check("drift conserves mass < 1e-13", std::abs(mass) < 1e-13);
  }
  {
    std::vector<double> rho0(13, 0.0);
    rho0[0] = 1.0;
    const auto path = mfq::solve_ode(p, rho0, mfq::uniform_grid(2.0, 51), 12, conv);
    mfq::Rng rng(12);
    double worst = 0;
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x(13);
      double s = 0;
      for (auto& v : x) s += (v = rng.uniform() - 0.5);
      for (auto& v : x) v -= s / 13.0;
      worst = std::max(worst, mfq::c_matrix_residual(path, p, x, 25));
    }
    check("C-matrix identity residual < 1e-10", worst < 1e-10);
  }
  {
    std::vector<double> rho0(21, 0.0);
    rho0[0] = 1.0;
    const auto path = mfq::solve_ode(p, rho0, mfq::uniform_grid(10.0, 2001), 20, conv);
    const auto coef = mfq::coefficients_from_path(path);
    const auto [lam, nu] = mfq::solve_lse(coef);
    check("ODE-path estimator recovers (0.5, 1) < 1e-3",
          std::abs(lam - 0.5) < 1e-3 && std::abs(nu - 1.0) < 1e-3);
    check("Cauchy-Schwarz a12^2 <= a11 a22",
          coef.a12 * coef.a12 <= coef.a11 * coef.a22 * (1 + 1e-12));
  }
  {
    std::vector<double> s{0.4, 0.3, 0.2, 0.1};
    const auto phi = mfq::phi_matrix(s, p, 5);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi);
    bool psd = es.eigenvalues().minCoeff() > -1e-12;
    bool zero_rows = phi.rowwise().sum().cwiseAbs().maxCoeff() < 1e-13;
    check("Phi PSD with zero row sums", psd && zero_rows);
  }
  {
    const auto a = mfq::simulate(p, 50, mfq::StateCounts::all_empty(50), 20, 99);
    const auto b = mfq::simulate(p, 50, mfq::StateCounts::all_empty(50), 20, 99);
    check("simulate deterministic given seed",
          a.measures == b.measures && a.events == b.events);
  }

  std::printf("%d check(s) failed\n", failures);
  return failures == 0 ? kExitOk : kExitNumerical;
}

void add_model_flags(CLI::App* cmd, mfq::Params& p) {
  cmd->add_option("--lambda", p.lambda, "Per-server arrival rate")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--nu", p.nu, "Service rate")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("-L,--choices", p.L, "Queues sampled per arrival")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  cmd->add_option("-T,--horizon", p.T, "Observation horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-of-L-choices queueing model: simulation and inference"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; flags override its values");

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Exact CTMC simulation of the N-queue system");
  add_model_flags(c_sim, sim.params);
  c_sim->add_option("-N,--queues", sim.N, "Number of queues")->check(CLI::PositiveNumber);
  c_sim->add_option("-m,--observations", sim.m, "Observation count")
      ->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  c_sim->add_option("--convention", sim.convention, "mass-conserving | paper-literal")
      ->check(CLI::IsMember({"mass-conserving", "paper-literal"}))
      ->capture_default_str();
  c_sim->add_option("-o,--out", sim.out, "Output CSV path")->capture_default_str();

  OdeOpts ode;
  auto* c_ode = app.add_subcommand("ode", "Mean-field limit ODE path");
  add_model_flags(c_ode, ode.params);
  c_ode->add_option("-J,--truncation", ode.J, "Level cap (default: auto from fixed point)");
  c_ode->add_option("--points", ode.points, "Grid points")->check(CLI::Range(2, 10000000));
  c_ode->add_option("--convention", ode.convention, "mass-conserving | paper-literal")
      ->check(CLI::IsMember({"mass-conserving", "paper-literal"}))
      ->capture_default_str();
  c_ode->add_option("-o,--out", ode.out, "Output CSV path")->capture_default_str();

  EstimateOpts est;
  auto* c_est = app.add_subcommand("estimate", "Approximate LSE from an observation CSV");
  c_est->add_option("-i,--input", est.input, "Observation CSV (sidecar JSON required)")
      ->required();
  c_est->add_option("--convention", est.convention, "Override the sidecar convention")
      ->check(CLI::IsMember({"mass-conserving", "paper-literal"}));
  c_est->add_option("--method", est.method, "endpoint | increment")
      ->check(CLI::IsMember({"endpoint", "increment"}))
      ->capture_default_str();
  c_est->add_option("--det-threshold", est.det_threshold, "Relative determinant threshold")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  FluctuationOpts fl;
  auto* c_fl = app.add_subcommand("fluctuation", "CLT covariance and limit-law sampling");
  add_model_flags(c_fl, fl.params);
  c_fl->add_option("-J,--truncation", fl.J, "Level cap (default: auto)");
  c_fl->add_option("--points", fl.points, "Grid points")->check(CLI::Range(2, 10000000));
  c_fl->add_option("--convention", fl.convention, "mass-conserving | paper-literal")
      ->check(CLI::IsMember({"mass-conserving", "paper-literal"}))
      ->capture_default_str();
  c_fl->add_option("--seed", fl.seed, "Base RNG seed")->capture_default_str();
  c_fl->add_option("--samples", fl.samples, "Limit-law draws")->check(CLI::NonNegativeNumber);
  c_fl->add_option("--cov-out", fl.cov_out, "Covariance CSV (t,i,j,sigma)");
  c_fl->add_option("--samples-out", fl.samples_out, "Limit-law samples CSV");

  ExperimentOpts exp;
  auto* c_exp = app.add_subcommand("experiment", "Replication grid of simulate -> estimate");
  add_model_flags(c_exp, exp.params);
  c_exp->add_option("--cell", exp.cells, "Grid cell as N:m (repeatable)")->required();
  c_exp->add_option("-r,--replications", exp.replications, "Replications per cell")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  c_exp->add_option("--convention", exp.convention, "mass-conserving | paper-literal")
      ->check(CLI::IsMember({"mass-conserving", "paper-literal"}))
      ->capture_default_str();
  c_exp->add_option("--method", exp.method, "endpoint | increment")
      ->check(CLI::IsMember({"endpoint", "increment"}))
      ->capture_default_str();
  c_exp->add_option("--seed", exp.seed, "Base RNG seed")->capture_default_str();
  c_exp->add_option("-o,--out-dir", exp.out_dir, "Output directory")->capture_default_str();
  c_exp->add_option("-w,--workers", exp.workers, "Worker threads (default: MFQI_WORKERS or 1)")
      ->check(CLI::Range(1, 1024));
  c_exp->add_flag("--resume", exp.resume, "Reload cells with a valid summary.json");

  auto* c_val = app.add_subcommand("validate", "Fast self-check suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim);
    if (c_ode->parsed()) return cmd_ode(ode);
    if (c_est->parsed()) return cmd_estimate(est);
    if (c_fl->parsed()) return cmd_fluctuation(fl);
    if (c_exp->parsed()) return cmd_experiment(exp);
    if (c_val->parsed()) return cmd_validate();
  } catch (const mfq::IllPosedError& e) {
    json diag = {{"error", "ill-posed"},
                 {"what", e.what()},
                 {"det", e.coefficients.det()},
                 {"det_ratio", e.coefficients.det_ratio()},
                 {"cond_a", e.diagnostics.cond_a},
                 {"cond_b", e.diagnostics.cond_b}};
    std::printf("%s\n", diag.dump().c_str());
    return kExitIllPosed;
  } catch (const mfq::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
