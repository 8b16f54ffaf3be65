#include "mfq/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

namespace mfq::io {

namespace {

using nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_row(std::FILE* f, int k, double t, int j, double rho) {
  std::fprintf(f, "%d,%.17g,%d,%.17g\n", k, t, j, rho);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::filesystem::path& p) {
  FilePtr f(std::fopen(p.string().c_str(), "w"));
  if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
  return f;
}

}  // namespace

void write_observations(const ObservationSet& obs, const std::filesystem::path& csv_path,
                        Convention c) {
  auto f = open_for_write(csv_path);
  std::fprintf(f.get(), "k,t,j,rho\n");
  for (std::size_t j = 0; j < obs.initial.size(); ++j)
    if (obs.initial[j] != 0.0) write_row(f.get(), 0, 0.0, static_cast<int>(j), obs.initial[j]);
  for (int k = 1; k <= obs.m; ++k) {
    const auto& meas = obs.measures[k - 1];
    for (std::size_t j = 0; j < meas.size(); ++j)
      if (meas[j] != 0.0) write_row(f.get(), k, obs.grid[k - 1], static_cast<int>(j), meas[j]);
  }

  json sidecar = {
      {"N", obs.N},         {"m", obs.m},
      {"T", obs.T},         {"lambda", obs.params.lambda},
      {"nu", obs.params.nu}, {"L", obs.params.L},
      {"seed", obs.seed},   {"convention", to_string(c)},
  };
  std::ofstream out(sidecar_path(csv_path));
  out << sidecar.dump(2) << "\n";
}

ObservationSet read_observations(const std::filesystem::path& csv_path, Convention* c) {
  std::ifstream sidecar_in(sidecar_path(csv_path));
  if (!sidecar_in)
    throw std::runtime_error("missing sidecar: " + sidecar_path(csv_path).string());
  json sidecar = json::parse(sidecar_in);

  ObservationSet obs;
  obs.N = sidecar.at("N").get<std::int64_t>();
  obs.m = sidecar.at("m").get<int>();
  obs.T = sidecar.at("T").get<double>();
  obs.params.lambda = sidecar.at("lambda").get<double>();
  obs.params.nu = sidecar.at("nu").get<double>();
  obs.params.L = sidecar.at("L").get<int>();
  obs.params.T = obs.T;
  obs.seed = sidecar.at("seed").get<std::uint64_t>();
  if (c) *c = convention_from_string(sidecar.at("convention").get<std::string>());
  if (obs.m < 1) throw std::runtime_error("sidecar has m < 1");

  obs.grid.resize(obs.m);
  for (int k = 1; k <= obs.m; ++k) obs.grid[k - 1] = obs.T * k / obs.m;
  obs.measures.assign(obs.m, {});

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open: " + csv_path.string());
  std::string line;
  std::getline(in, line);
  if (line != "k,t,j,rho")
    throw std::runtime_error(csv_path.string() + ":1: bad header '" + line + "'");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    int k = -1, j = -1;
    double t = 0, rho = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%d,%lf", &k, &t, &j, &rho) != 4 || k < 0 ||
        k > obs.m || j < 0 || rho < 0)
      throw std::runtime_error(csv_path.string() + ":" + std::to_string(lineno) +
                               ": malformed row '" + line + "'");
    auto& target = k == 0 ? obs.initial : obs.measures[k - 1];
    if (j >= static_cast<int>(target.size())) target.resize(j + 1, 0.0);
    target[j] = rho;
  }

  std::size_t levels = obs.initial.size();
  for (const auto& v : obs.measures) levels = std::max(levels, v.size());
  if (levels == 0) throw std::runtime_error(csv_path.string() + ": no data rows");
  obs.initial.resize(levels, 0.0);
  for (auto& v : obs.measures) v.resize(levels, 0.0);
  return obs;
}

void write_path(const MeanFieldPath& path, const std::filesystem::path& csv_path) {
  auto f = open_for_write(csv_path);
  std::fprintf(f.get(), "t,j,rho\n");
  for (std::size_t k = 0; k < path.grid.size(); ++k)
    for (std::size_t j = 0; j < path.states[k].size(); ++j)
      if (path.states[k][j] != 0.0)
        std::fprintf(f.get(), "%.17g,%zu,%.17g\n", path.grid[k], j, path.states[k][j]);
}

std::string report_to_json(const EstimateReport& r) {
  json j = {
      {"lambda_hat", r.lambda_hat ? json(*r.lambda_hat) : json(nullptr)},
      {"nu_hat", r.nu_hat ? json(*r.nu_hat) : json(nullptr)},
      {"a11", r.coefficients.a11},
      {"a12", r.coefficients.a12},
      {"a22", r.coefficients.a22},
      {"b1", r.coefficients.b1},
      {"b2", r.coefficients.b2},
      {"det", r.coefficients.det()},
      {"det_ratio", r.coefficients.det_ratio()},
      {"cond_a", r.wellposed.cond_a},
      {"cond_b", r.wellposed.cond_b},
      {"ill_posed", r.ill_posed},
      {"convention", to_string(r.convention)},
      {"N", r.N},
      {"m", r.m},
      {"T", r.T},
      {"seed", r.seed},
  };
  return j.dump();
}

}  // namespace mfq::io
