#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "mfq/core.hpp"
#include "mfq/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("MFQ_CLI_BIN");
  REQUIRE(b != nullptr);
  return b;
}

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "mfq_cli_test";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = bin() + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file.string();
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("simulate --no-such-flag") == 2);
  const auto dir = work_dir();
  CHECK(run("simulate -m 0 -o " + (dir / "x.csv").string()) == 2);
  CHECK(run("simulate -N 0 -o " + (dir / "x.csv").string()) == 2);
  CHECK(run("estimate -i " + (dir / "does_not_exist.csv").string()) == 2);
}

TEST_CASE("simulate writes observation files and is reproducible") {
  const auto dir = work_dir();
  const auto a = dir / "obs_a.csv";
  const auto b = dir / "obs_b.csv";
  const std::string flags = " --seed 5 -N 100 -m 50 -T 1 ";
  CHECK(run("simulate" + flags + "-o " + a.string()) == 0);
  CHECK(run("simulate" + flags + "-o " + b.string()) == 0);
  REQUIRE(fs::exists(a));
  REQUIRE(fs::exists(dir / "obs_a.json"));
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(dir / "obs_a.json") == slurp(dir / "obs_b.json"));

  const json sidecar = json::parse(slurp(dir / "obs_a.json"));
  CHECK(sidecar.at("N") == 100);
  CHECK(sidecar.at("m") == 50);
  CHECK(sidecar.at("T") == 1.0);
  CHECK(sidecar.at("seed") == 5);
  CHECK(sidecar.at("convention") == "mass-conserving");

  // round-trip through the library reader
  const auto obs = mfq::io::read_observations(a);
  CHECK(obs.N == 100);
  CHECK(obs.m == 50);
  CHECK((int)obs.measures.size() == 50);
}

TEST_CASE("estimate on simulated data prints a report and exits 0") {
  const auto dir = work_dir();
  const auto csv = dir / "obs_est.csv";
  REQUIRE(run("simulate --seed 9 -N 500 -m 500 -T 10 -o " + csv.string()) == 0);
  const auto out = dir / "report.json";
  CHECK(run("estimate --method increment -i " + csv.string(), out) == 0);
  const json rep = json::parse(slurp(out));
  CHECK(rep.at("ill_posed") == false);
  CHECK(rep.at("lambda_hat").get<double>() > 0.0);
  CHECK(rep.at("nu_hat").get<double>() > 0.0);
  CHECK(rep.contains("det_ratio"));
  CHECK(rep.at("N") == 500);
}

TEST_CASE("ill-posed input exits 3 with diagnostics") {
  // constant path frozen at the fixed point: U and V stay exactly collinear,
  // the normal equations are singular
  const auto dir = work_dir();
  mfq::Params p;
  const auto rho = mfq::fixed_point(p, 12);
  mfq::ObservationSet obs;
  obs.N = 1000;
  obs.m = 20;
  obs.T = 2.0;
  obs.params = p;
  obs.initial = rho;
  for (int k = 1; k <= obs.m; ++k) {
    obs.grid.push_back(obs.T * k / obs.m);
    obs.measures.push_back(rho);
  }
  const auto csv = dir / "obs_fixed.csv";
  mfq::io::write_observations(obs, csv, mfq::Convention::MassConserving);
  const auto out = dir / "illposed.json";
  CHECK(run("estimate -i " + csv.string(), out) == 3);
  const json rep = json::parse(slurp(out));
  CHECK(rep.at("ill_posed") == true);
}

TEST_CASE("corrupt observation CSV exits 2") {
  const auto dir = work_dir();
  const auto csv = dir / "corrupt.csv";
  {
    std::ofstream f(csv);
    f << "k,t,j,rho\n0,0,0,not_a_number\n";
  }
  {
    std::ofstream f(dir / "corrupt.json");
    f << R"({"N":10,"m":1,"T":1.0,"lambda":0.5,"nu":1.0,"L":2,"seed":0,)"
      << R"("convention":"mass-conserving"})";
  }
  CHECK(run("estimate -i " + csv.string()) == 2);
}

TEST_CASE("ode writes a mean-field path") {
  const auto dir = work_dir();
  const auto csv = dir / "path.csv";
  CHECK(run("ode -T 2 --points 41 -o " + csv.string()) == 0);
  std::istringstream lines(slurp(csv));
  std::string header;
  std::getline(lines, header);
  CHECK(header == "t,j,rho");
}

TEST_CASE("fluctuation emits covariance and limit samples") {
  const auto dir = work_dir();
  const auto cov = dir / "cov.csv";
  const auto samp = dir / "samples.csv";
  CHECK(run("fluctuation -T 1 --points 51 --samples 20 --seed 3 --cov-out " + cov.string() +
            " --samples-out " + samp.string()) == 0);
  CHECK(fs::exists(cov));
  std::istringstream lines(slurp(samp));
  std::string header;
  std::getline(lines, header);
  CHECK(header.find("I") != std::string::npos);
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 20);
}

TEST_CASE("experiment subcommand writes a grid and resumes") {
  const auto dir = work_dir() / "grid";
  fs::remove_all(dir);
  const std::string cmd = "experiment --cell 40:30 -r 4 --method increment --seed 11 -T 5 "
                          "--out-dir " + dir.string();
  CHECK(run(cmd) == 0);
  const auto summary = dir / "cell_N40_m30" / "summary.json";
  REQUIRE(fs::exists(summary));
  const auto before = slurp(summary);
  CHECK(run(cmd + " --resume") == 0);
  CHECK(slurp(summary) == before);
}

TEST_CASE("validate passes on a healthy build") {
  CHECK(run("validate", work_dir() / "validate.txt") == 0);
  const auto text = slurp(work_dir() / "validate.txt");
  CHECK(text.find("FAIL") == std::string::npos);
  CHECK(text.find("PASS") != std::string::npos);
}
