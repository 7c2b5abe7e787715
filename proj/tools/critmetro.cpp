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

// critmetro: experiment driver.
//
//   critmetro <fisher|simulate|bounds|pmf> --config FILE [--seed S] [--jobs J] [--out DIR] [--quiet]
//
// Exit status: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "critmetro/commands.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace critmetro;

  CLI::App app{"critmetro: Bayesian critical-point metrology experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  bool quiet = false;

  const std::map<std::string, std::function<CommandResult(const CommandContext&)>> commands{
      {"fisher", cmd_fisher}, {"simulate", cmd_simulate}, {"bounds", cmd_bounds}, {"pmf", cmd_pmf}, {"oracle", cmd_oracle}};
  const std::map<std::string, std::string> help{
      {"fisher", "Fisher information and QFI sweep of the Ising chain"},
      {"simulate", "EMSD against N and m for the configured strategy"},
      {"bounds", "Van Trees and no-go bounds for the non-adaptive baseline"},
      {"pmf", "Ising magnetization distribution"},
      {"oracle", ""}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    if (name == "oracle") sub->group("");
    sub->add_option("-c,--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override [experiment] master_seed");
    sub->add_option("-j,--jobs", jobs, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    sub->add_option("-o,--out", out, std::string("Output directory (default: $") + kOutputDirEnv + ", then config)");
    sub->add_flag("-q,--quiet", quiet, "No progress on standard error");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const auto* chosen = app.get_subcommands().front();
  CommandContext ctx;
  try {
    auto table = parse_config_file(config_path);
    ctx.config = experiment_config(table);
    if (seed) ctx.config.master_seed = *seed;
    if (jobs) ctx.config.jobs = *jobs;
    ctx.config.validate();
    ctx.output_dir = resolve_output_dir(ctx.config, out);
    ctx.log = quiet ? nullptr : &std::cerr;
  } catch (const std::exception& e) {
    std::cerr << "critmetro: configuration error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto result = commands.at(chosen->get_name())(ctx);
    for (const auto& f : result.files) std::cout << f.string() << '\n';
    if (result.numerical_failure) {
      std::cerr << "critmetro: numerical failure: " << *result.numerical_failure << '\n';
      return kExitNumerical;
    }
  } catch (const std::invalid_argument& e) {  // ConfigError, InputError
    std::cerr << "critmetro: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::length_error& e) {  // SizeError
    std::cerr << "critmetro: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "critmetro: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
