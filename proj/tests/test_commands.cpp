// Copyright 2026 The critmetro Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "critmetro/commands.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace critmetro {
namespace {

namespace fs = std::filesystem;

const std::string kCli = CRITMETRO_CLI_PATH;
const std::string kConfigs = CRITMETRO_CONFIG_DIR;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("critmetro_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + kCli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

CommandContext smoke_context(const fs::path& out) {
  CommandContext ctx;
  ctx.config = experiment_config(parse_config_file(kConfigs + "/smoke.toml"));
  ctx.output_dir = out;
  return ctx;
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(-2.0), "-2");
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(42), "42");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(CsvWriter, HeaderRowsAndWidthCheck) {
  CsvWriter csv({"a", "b"});
  csv.row(1, 0.5);
  EXPECT_EQ(csv.str(), "a,b\n1,0.5\n");
  EXPECT_THROW(csv.row(1), InputError);
}

TEST(OutputDir, FlagThenEnvironmentThenConfig) {
  ExperimentConfig c;
  c.output_dir = "from_config";
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(resolve_output_dir(c, std::nullopt), fs::path("from_config"));
  ::setenv(kOutputDirEnv, "from_env", 1);
  EXPECT_EQ(resolve_output_dir(c, std::nullopt), fs::path("from_env"));
  EXPECT_EQ(resolve_output_dir(c, std::string("from_flag")), fs::path("from_flag"));
  ::unsetenv(kOutputDirEnv);
}

TEST(Commands, ShippedConfigsLoad) {
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".toml") continue;
    EXPECT_NO_THROW(experiment_config(parse_config_file(e.path().string()))) << e.path();
  }
}

TEST(Commands, FisherTable) {
  TempDir dir;
  const auto ctx = smoke_context(dir.path());
  cmd_fisher(ctx);
  const auto rows = read_csv(dir.path() / "fisher.csv");
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], (std::vector<std::string>{"N", "field", "fisher", "fisher_per_site", "qfi"}));
  EXPECT_EQ(rows.size(), 1 + ctx.config.fisher_n_list.size() * ctx.config.field_points);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double n = std::stod(rows[i][0]), f = std::stod(rows[i][2]), q = std::stod(rows[i][4]);
    EXPECT_LE(f, q * (1 + 1e-6) + 1e-12) << "row " << i;
    EXPECT_NEAR(std::stod(rows[i][3]), f / n, 1e-12 * (1 + f));
  }
}

TEST(Commands, PmfSumsToOne) {
  TempDir dir;
  cmd_pmf(smoke_context(dir.path()));
  const auto rows = read_csv(dir.path() / "pmf.csv");
  EXPECT_EQ(rows[0], (std::vector<std::string>{"outcome", "probability"}));
  double total = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    total += std::stod(rows[i][1]);
    if (i > 1) {
      EXPECT_LT(std::stod(rows[i - 1][0]), std::stod(rows[i][0]));
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Commands, OracleAgreesWithAnalytic) {
  TempDir dir;
  cmd_oracle(smoke_context(dir.path()));
  const auto rows = read_csv(dir.path() / "oracle_pmf.csv");
  EXPECT_EQ(rows[0], (std::vector<std::string>{"outcome", "exact", "analytic", "abs_error"}));
  ASSERT_GT(rows.size(), 1u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][3]), 1e-10);
}

TEST(Commands, SimulateOutputs) {
  TempDir dir;
  const auto ctx = smoke_context(dir.path());
  const auto result = cmd_simulate(ctx);
  EXPECT_FALSE(result.numerical_failure);
  EXPECT_EQ(result.files.size(), 5u);
  const std::vector<std::string> header{"N", "m", "n_traj", "emsd", "emsd_stderr", "emsd_inverse", "emsd_inverse_stderr",
                                        "mean_posterior_variance", "f0", "gamma_hat", "gamma_stderr", "van_trees_rhs",
                                        "failures"};
  const auto by_n = read_csv(dir.path() / "emsd_vs_n.csv");
  EXPECT_EQ(by_n[0], header);
  EXPECT_EQ(by_n.size(), 1 + ctx.config.n_list.size());
  const auto by_m = read_csv(dir.path() / "emsd_vs_m.csv");
  EXPECT_EQ(by_m[0], header);
  EXPECT_EQ(by_m.size(), 1 + ctx.config.m_list.size());
  for (std::size_t i = 1; i < by_m.size(); ++i) EXPECT_EQ(std::stoi(by_m[i][1]), ctx.config.m_list[i - 1]);
  const auto fit = nlohmann::json::parse(slurp(dir.path() / "scaling_fit.json"));
  EXPECT_EQ(fit["quantity"], "emsd_inverse");
  EXPECT_TRUE(fit["exponent"].is_number());
  EXPECT_EQ(fit["n_list"].size(), ctx.config.n_list.size());
}

TEST(Commands, BoundsOutputs) {
  TempDir dir;
  const auto ctx = smoke_context(dir.path());
  cmd_bounds(ctx);
  const auto rows = read_csv(dir.path() / "bounds.csv");
  EXPECT_EQ(rows[0], (std::vector<std::string>{"N", "f0", "gamma_nonadaptive", "van_trees_rhs", "no_go_bound"}));
  EXPECT_EQ(rows.size(), 1 + ctx.config.bounds_n_list.size());
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_NEAR(std::stod(rows[i][3]), std::stod(rows[i][1]) + std::stod(rows[i][2]), 1e-9 * std::stod(rows[i][3]));
  const auto k = nlohmann::json::parse(slurp(dir.path() / "bound_constants.json"));
  EXPECT_GT(k["alpha_c"].get<double>(), 0.0);
  EXPECT_GT(k["C"].get<double>(), 0.0);
}

TEST(Commands, BoundsWidenSweepForBroadPeaks) {
  // At N = 16 the stiffness Fisher peak is wider than the prior support.
  auto c = experiment_config(parse_config_string(
      "[experiment]\nmodel = \"bosehubbard\"\n[prior]\nlambda_min = 0.54\nlambda_max = 0.9\nn_points = 200\n"
      "[simulate]\nn_list = [16, 36, 64]\nm = 8\n[bounds]\nn_list = [16, 36, 64]\nfit_n_list = [16, 36, 64]\n"
      "fit_points = 401\n"));
  const auto r = compute_bounds(c);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_NEAR(r.lambda_c, 0.72, 1e-12);
  // Logistic g: F ~ g'^2 peaks at N^{2 nu} / (16 sigma0^2); F halves where
  // e/(1+e)^2 = 1/(4 sqrt 2), e = exp(-|y|).
  const double b = 4 * std::sqrt(2.0) - 2;
  const double e = 0.5 * (b - std::sqrt(b * b - 4));
  EXPECT_NEAR(r.constants.alpha_c, 1.0 / (16 * 0.01), 1e-6);
  EXPECT_NEAR(r.constants.C, -std::log(e), 0.01);
  for (const auto& row : r.rows) EXPECT_GT(row.no_go_bound, row.van_trees_rhs);
}

TEST(Cli, SimulateIsReproducibleAndThreadIndependent) {
  TempDir a, b, c;
  const std::string cfg = "-c '" + kConfigs + "/smoke.toml' -q";
  ASSERT_EQ(run_cli("simulate " + cfg + " -j 1 -o '" + a.path().string() + "'"), 0);
  ASSERT_EQ(run_cli("simulate " + cfg + " -j 1 -o '" + b.path().string() + "'"), 0);
  ASSERT_EQ(run_cli("simulate " + cfg + " -j 8 -o '" + c.path().string() + "'"), 0);
  for (const char* f : {"emsd_vs_n.csv", "emsd_vs_m.csv", "scaling_fit.json"}) {
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
    EXPECT_EQ(slurp(a.path() / f), slurp(c.path() / f)) << f;
  }
}

TEST(Cli, SeedOverrideChangesResults) {
  TempDir a, b;
  const std::string cfg = "-c '" + kConfigs + "/smoke.toml' -q";
  ASSERT_EQ(run_cli("simulate " + cfg + " --seed 8 -o '" + a.path().string() + "'"), 0);
  ASSERT_EQ(run_cli("simulate " + cfg + " --seed 9 -o '" + b.path().string() + "'"), 0);
  EXPECT_NE(slurp(a.path() / "emsd_vs_n.csv"), slurp(b.path() / "emsd_vs_n.csv"));
}

TEST(Cli, EnvironmentSetsOutputDirectory) {
  TempDir dir;
  const auto target = dir.path() / "env_out";
  ASSERT_EQ(run_cli("pmf -q -c '" + kConfigs + "/smoke.toml'", std::string(kOutputDirEnv) + "='" + target.string() + "'"), 0);
  EXPECT_TRUE(fs::exists(target / "pmf.csv"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  TempDir dir;
  const auto bad = dir.path() / "bad.toml";
  std::ofstream(bad) << "[prior]\nalpah = 1\n";
  EXPECT_EQ(run_cli("pmf -q -c '" + bad.string() + "'"), 2);
  EXPECT_EQ(run_cli("pmf -q -c '" + (dir.path() / "missing.toml").string() + "'"), 2);
  EXPECT_EQ(run_cli("frobnicate -c '" + kConfigs + "/smoke.toml'"), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("fisher -q -c '" + kConfigs + "/bosehubbard_realtime.toml' -o '" + dir.path().string() + "'"), 2);
  EXPECT_EQ(run_cli("pmf -q -j 0 -c '" + kConfigs + "/smoke.toml'"), 2);
}

TEST(Cli, RuntimeFailureExitsThree) {
  TempDir dir;
  const auto blocker = dir.path() / "file";
  std::ofstream(blocker) << "x";
  EXPECT_EQ(run_cli("pmf -q -c '" + kConfigs + "/smoke.toml' -o '" + (blocker / "sub").string() + "'"), 3);
}

}  // namespace
}  // namespace critmetro
