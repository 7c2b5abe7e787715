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

#ifndef CRITMETRO_COMMANDS_HPP
#define CRITMETRO_COMMANDS_HPP

// Subcommands of the critmetro driver. Each takes a validated
// ExperimentConfig, writes its tables under the output directory and
// returns the list of files it produced.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "critmetro/bosehubbard.hpp"
#include "critmetro/config.hpp"
#include "critmetro/errors.hpp"
#include "critmetro/inference.hpp"
#include "critmetro/ising.hpp"
#include "critmetro/oracle.hpp"
#include "critmetro/priors.hpp"
#include "critmetro/simulator.hpp"
#include "critmetro/strategies.hpp"

namespace critmetro {

/// Shortest round-trip decimal form; locale independent.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string format_number(std::int64_t v) { return std::to_string(v); }
inline std::string format_number(int v) { return std::to_string(v); }
inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

/// Comma-separated table with a header row and '\n' line ends.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { line(header); }

  template <class... T>
  void row(const T&... values) {
    if (sizeof...(T) != columns_) throw InputError("CsvWriter: row width does not match header");
    std::vector<std::string> cells{format_number(values)...};
    line(cells);
  }

  const std::string& str() const { return text_; }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

/// Two whitespace-separated columns with a '#' comment header, for gnuplot.
inline std::string gnuplot_columns(const std::string& x_name, const std::string& y_name,
                                   const std::vector<std::pair<double, double>>& points) {
  std::string out = "# " + x_name + " " + y_name + "\n";
  for (const auto& [x, y] : points) out += format_number(x) + " " + format_number(y) + "\n";
  return out;
}

struct CommandContext {
  ExperimentConfig config;
  std::filesystem::path output_dir;
  std::ostream* log = nullptr;  // progress; never results
};

struct CommandResult {
  std::vector<std::filesystem::path> files;
  /// Set when the run finished but a numerical acceptance condition failed.
  std::optional<std::string> numerical_failure;
};

inline constexpr const char* kOutputDirEnv = "CRITMETRO_OUTPUT_DIR";

/// Output directory: explicit flag, then the environment, then the config.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return config.output_dir;
}

namespace detail {

inline std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  return path;
}

inline void note(const CommandContext& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << msg << '\n';
}

}  // namespace detail

inline ParameterGrid prior_grid(const ExperimentConfig& c) { return grid_from_prior(c.prior, c.grid_points); }

/// Critical-point control law of the configured model.
inline double model_control(const ExperimentConfig& c, double estimate) {
  if (c.model == ModelKind::ising) return critical_control(estimate, c.coupling);
  return estimate / c.bosehubbard.critical_ratio;
}

/// Configured limits, defaulting to the law's image of the prior support.
inline ControlLimits control_limits(const ExperimentConfig& c) {
  const double a = model_control(c, c.prior.lambda_min);
  const double b = model_control(c, c.prior.lambda_max);
  ControlLimits limits{std::min(a, b), std::max(a, b)};
  if (c.strategy.control_min) limits.lower = *c.strategy.control_min;
  if (c.strategy.control_max) limits.upper = *c.strategy.control_max;
  if (!(limits.lower <= limits.upper)) throw ConfigError("[strategy] control limits are inverted");
  if (c.model == ModelKind::bosehubbard && !(limits.lower > 0.0))
    throw ConfigError("[strategy] control_min must be > 0 for the Bose-Hubbard model");
  return limits;
}

/// Non-adaptive setting: configured s0, else critical at the prior mean.
inline double baseline_setting(const ExperimentConfig& c, const ParameterGrid& prior) {
  return c.strategy.s0 ? *c.strategy.s0 : model_control(c, posterior_mean(prior));
}

inline Strategy make_strategy(const ExperimentConfig& c, const ParameterGrid& prior, int n_sites,
                              const std::string& name) {
  const auto limits = control_limits(c);
  const double s0 = baseline_setting(c, prior);
  if (name == "nonadaptive") return Strategy::non_adaptive(s0, limits);
  if (name == "twostep")
    return Strategy::two_step(s0, two_step_threshold(c.strategy.threshold_coeff, n_sites, 1.0, c.effective_dnu()),
                              c.strategy.epsilon, limits);
  if (name == "realtime") return Strategy::real_time(limits);
  throw ConfigError("unknown strategy '" + name + "'");
}

inline Strategy make_strategy(const ExperimentConfig& c, const ParameterGrid& prior, int n_sites) {
  return make_strategy(c, prior, n_sites, c.strategy.name);
}

/// Ising channel with a Fisher table covering every total field the
/// configured prior and control limits can produce.
inline IsingChannel make_ising_channel(const ExperimentConfig& c, int n_sites) {
  IsingModel model(n_sites, c.coupling);
  const auto limits = control_limits(c);
  const double lo = c.prior.lambda_min + limits.lower;
  const double hi = c.prior.lambda_max + limits.upper;
  const double step = 0.02 * c.coupling / n_sites;
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  return IsingChannel(model, std::make_shared<const FisherTable>(model, lo, hi, std::max<std::size_t>(points, 1001)));
}

inline ScalingFunction scaling_function(const ExperimentConfig& c) {
  const auto& b = c.bosehubbard;
  if (b.g_form == "logistic") return LogisticScaling{b.logistic_amplitude, b.logistic_width};
  const auto table = read_stiffness_csv(b.g_table_path);
  return scaling_function_from_table(table, b.critical_ratio, b.nu, b.savgol_window, b.savgol_order);
}

inline BoseHubbardChannel make_bosehubbard_channel(const ExperimentConfig& c, int n_sites, const ScalingFunction& g) {
  StiffnessModel m;
  m.critical_ratio = c.bosehubbard.critical_ratio;
  m.nu = c.bosehubbard.nu;
  m.n_sites = n_sites;
  m.sigma0 = c.bosehubbard.sigma0;
  m.g = g;
  return BoseHubbardChannel(m);
}

/// Calls fn(channel_factory) with a factory int -> channel for the configured model.
template <class Fn>
decltype(auto) with_channel_family(const ExperimentConfig& c, Fn&& fn) {
  if (c.model == ModelKind::ising) return fn([&c](int n) { return make_ising_channel(c, n); });
  auto g = std::make_shared<const ScalingFunction>(scaling_function(c));
  return fn([&c, g](int n) { return make_bosehubbard_channel(c, n, *g); });
}

inline std::string model_name(ModelKind k) { return k == ModelKind::ising ? "ising" : "bosehubbard"; }

namespace detail {

inline const std::vector<std::string>& ensemble_header() {
  static const std::vector<std::string> h{"N",
                                          "m",
                                          "n_traj",
                                          "emsd",
                                          "emsd_stderr",
                                          "emsd_inverse",
                                          "emsd_inverse_stderr",
                                          "mean_posterior_variance",
                                          "f0",
                                          "gamma_hat",
                                          "gamma_stderr",
                                          "van_trees_rhs",
                                          "failures"};
  return h;
}

inline void ensemble_row(CsvWriter& csv, const EmsdRow& r) {
  const auto& e = r.ensemble;
  csv.row(r.n, r.m, static_cast<std::uint64_t>(r.n_traj), e.emsd.value, e.emsd.standard_error, e.emsd_inverse(),
          e.emsd_inverse_standard_error(), e.emsd.mean_posterior_variance, e.f0, e.gamma_hat, e.gamma_standard_error,
          van_trees_rhs(e.f0, e.gamma_hat), static_cast<std::uint64_t>(e.failures));
}

}  // namespace detail

/// Fisher information sweep of the Ising M_z measurement and the ground-state QFI.
inline CommandResult cmd_fisher(const CommandContext& ctx) {
  const auto& c = ctx.config;
  if (c.model != ModelKind::ising) throw ConfigError("fisher: only model = \"ising\" is supported");
  if (!(c.field_min > 0.0)) throw ConfigError("[fisher] field_min must be > 0");
  CsvWriter csv({"N", "field", "fisher", "fisher_per_site", "qfi"});
  for (int n : c.fisher_n_list) {
    IsingModel model(n, c.coupling);
    for (int i = 0; i < c.field_points; ++i) {
      const double field = c.field_min + (c.field_max - c.field_min) * i / (c.field_points - 1);
      const double f = classical_fisher_mz(model, field, 0.0);
      csv.row(n, field, f, f / n, qfi_damski(model, field));
    }
    detail::note(ctx, "fisher: N=" + std::to_string(n) + " done");
  }
  return {{detail::write_file(ctx.output_dir, "fisher.csv", csv.str())}, std::nullopt};
}

/// Magnetization distribution of the Ising ground state, outcomes ascending.
inline CommandResult cmd_pmf(const CommandContext& ctx) {
  const auto& c = ctx.config;
  if (c.model != ModelKind::ising) throw ConfigError("pmf: only model = \"ising\" is supported");
  const auto pmf = magnetization_pmf(IsingModel(c.pmf_n_sites, c.coupling), c.pmf_field);
  CsvWriter csv({"outcome", "probability"});
  for (std::size_t k = pmf.size(); k-- > 0;) csv.row(pmf.outcome(k), pmf.probability(k));
  return {{detail::write_file(ctx.output_dir, "pmf.csv", csv.str())}, std::nullopt};
}

/// Exact-diagonalization cross-check of the magnetization distribution.
inline CommandResult cmd_oracle(const CommandContext& ctx) {
  const auto& c = ctx.config;
  const int n = c.oracle_n_sites;
  const auto exact = oracle::exact_magnetization_pmf(oracle::exact_ground_state(n, c.coupling, c.oracle_field));
  const auto analytic = magnetization_pmf(IsingModel(n, c.coupling), c.oracle_field);
  CsvWriter csv({"outcome", "exact", "analytic", "abs_error"});
  for (std::size_t down = exact.probabilities.size(); down-- > 0;) {
    const double x = exact.outcome(down);
    const double p = exact.probabilities[down];
    const double q = analytic.probability_of(x);
    csv.row(x, p, q, std::fabs(p - q));
  }
  return {{detail::write_file(ctx.output_dir, "oracle_pmf.csv", csv.str())}, std::nullopt};
}

/**
  EMSD against N (at m) and against m (at m_sweep_n) for the configured
  strategy, plus the log-log fit of EMSD^{-1} against N. Flags a numerical
  failure when any ensemble loses more than max_failure_rate of its
  trajectories.
*/
/// EMSD against N over config.n_list at config.m, for the named strategy.
inline std::vector<EmsdRow> sweep_vs_n(const ExperimentConfig& c, const std::string& strategy,
                                       const EnsembleOptions& options, std::ostream* log = nullptr) {
  const auto prior = prior_grid(c);
  std::vector<EmsdRow> rows;
  with_channel_family(c, [&](auto&& make_channel) {
    for (int n : c.n_list) {
      const auto channel = make_channel(n);
      rows.push_back({n, c.m, c.n_traj,
                      run_ensemble(channel, make_strategy(c, prior, n, strategy), c.n_traj, c.m, c.master_seed, prior, options)});
      if (log) *log << "simulate: " << strategy << " N=" << n << " m=" << c.m << " done\n";
    }
    return 0;
  });
  return rows;
}

/// EMSD against m over config.m_list at N = config.m_sweep_n.
inline std::vector<EmsdRow> sweep_vs_m(const ExperimentConfig& c, const std::string& strategy,
                                       const EnsembleOptions& options, std::ostream* log = nullptr) {
  const auto prior = prior_grid(c);
  std::vector<EmsdRow> rows;
  with_channel_family(c, [&](auto&& make_channel) {
    const auto channel = make_channel(c.m_sweep_n);
    const auto s = make_strategy(c, prior, c.m_sweep_n, strategy);
    for (int m : c.m_list) {
      rows.push_back({c.m_sweep_n, m, c.n_traj, run_ensemble(channel, s, c.n_traj, m, c.master_seed, prior, options)});
      if (log) *log << "simulate: " << strategy << " N=" << c.m_sweep_n << " m=" << m << " done\n";
    }
    return 0;
  });
  return rows;
}

inline CommandResult cmd_simulate(const CommandContext& ctx) {
  const auto& c = ctx.config;
  EnsembleOptions options;
  options.jobs = c.jobs;
  const auto by_n = sweep_vs_n(c, c.strategy.name, options, ctx.log);
  const auto by_m = sweep_vs_m(c, c.strategy.name, options, ctx.log);

  CsvWriter n_csv(detail::ensemble_header()), m_csv(detail::ensemble_header());
  std::vector<std::pair<double, double>> n_plot, m_plot;
  for (const auto& r : by_n) {
    detail::ensemble_row(n_csv, r);
    n_plot.emplace_back(r.n, r.ensemble.emsd.value);
  }
  for (const auto& r : by_m) {
    detail::ensemble_row(m_csv, r);
    m_plot.emplace_back(r.m, r.ensemble.emsd.value);
  }

  nlohmann::ordered_json fit_json;
  fit_json["model"] = model_name(c.model);
  fit_json["strategy"] = c.strategy.name;
  fit_json["quantity"] = "emsd_inverse";
  fit_json["m"] = c.m;
  fit_json["n_traj"] = c.n_traj;
  fit_json["master_seed"] = c.master_seed;
  fit_json["n_list"] = c.n_list;
  if (by_n.size() >= 3) {
    const auto fit = inverse_emsd_fit(by_n);
    fit_json["exponent"] = fit.exponent;
    fit_json["exponent_stderr"] = fit.exponent_standard_error;
    fit_json["intercept"] = fit.intercept;
    fit_json["residual_norm"] = fit.residual_norm;
  } else {
    fit_json["exponent"] = nullptr;
  }

  CommandResult result;
  result.files.push_back(detail::write_file(ctx.output_dir, "emsd_vs_n.csv", n_csv.str()));
  result.files.push_back(detail::write_file(ctx.output_dir, "emsd_vs_m.csv", m_csv.str()));
  result.files.push_back(detail::write_file(ctx.output_dir, "emsd_vs_n.dat", gnuplot_columns("N", "emsd", n_plot)));
  result.files.push_back(detail::write_file(ctx.output_dir, "emsd_vs_m.dat", gnuplot_columns("m", "emsd", m_plot)));
  result.files.push_back(detail::write_file(ctx.output_dir, "scaling_fit.json", fit_json.dump(2) + "\n"));

  for (const auto* rows : {&by_n, &by_m})
    for (const auto& r : *rows)
      if (r.ensemble.failure_rate() > c.max_failure_rate)
        result.numerical_failure = "ensemble N=" + std::to_string(r.n) + " m=" + std::to_string(r.m) + " lost " +
                                   std::to_string(r.ensemble.failures) + " trajectories";
  return result;
}

namespace detail {

// True when the sweep falls to half its maximum somewhere on either side of the peak.
inline bool half_maximum_resolved(const std::vector<FisherSample>& sweep) {
  const auto top = std::max_element(sweep.begin(), sweep.end(), [](const auto& a, const auto& b) { return a.fisher < b.fisher; });
  const double half = 0.5 * top->fisher;
  return std::any_of(sweep.begin(), top, [&](const auto& s) { return s.fisher <= half; }) ||
         std::any_of(top + 1, sweep.end(), [&](const auto& s) { return s.fisher <= half; });
}

}  // namespace detail

inline constexpr int kMaxSweepWidenings = 6;

/**
  Fisher samples F(lambda, s) for each N in ns, starting from [lo, hi].
  When the peak is wider than that range the sweep is widened about
  `centre` (doubling, at most kMaxSweepWidenings times, never below
  `floor`) until the half maximum is reached.
*/
template <class ChannelFactory>
std::vector<FisherSample> fisher_samples(ChannelFactory&& make_channel, const std::vector<int>& ns, double setting,
                                         double lo, double hi, int points, double centre,
                                         double floor = -std::numeric_limits<double>::infinity()) {
  std::vector<FisherSample> out;
  for (int n : ns) {
    const auto channel = make_channel(n);
    double a = lo, b = hi;
    std::vector<FisherSample> sweep;
    for (int widening = 0;; ++widening) {
      sweep.clear();
      for (int i = 0; i < points; ++i) {
        const double lambda = a + (b - a) * i / (points - 1);
        sweep.push_back({lambda, n, channel.fisher(lambda, setting)});
      }
      if (widening == kMaxSweepWidenings || detail::half_maximum_resolved(sweep)) break;
      a = std::max(floor, centre - 2.0 * (centre - a));
      b = centre + 2.0 * (b - centre);
    }
    out.insert(out.end(), sweep.begin(), sweep.end());
  }
  return out;
}

struct BoundsRow {
  int n = 0;
  double gamma_nonadaptive = 0.0;
  double van_trees_rhs = 0.0;
  double no_go_bound = 0.0;
};

struct BoundsReport {
  double setting = 0.0;
  double lambda_c = 0.0;
  double prior_density_at_lambda_c = 0.0;
  double f0 = 0.0;
  BoundConstants constants;
  std::vector<BoundsRow> rows;
};

/**
  Van Trees right-hand side for the non-adaptive baseline and the no-go
  bound with constants fitted to the channel's Fisher information at s0.
*/
inline BoundsReport compute_bounds(const ExperimentConfig& c) {
  const auto prior = prior_grid(c);
  BoundsReport r;
  r.setting = control_limits(c).clamp(baseline_setting(c, prior));
  r.f0 = prior_fisher(prior);
  r.lambda_c = c.model == ModelKind::ising ? c.coupling - r.setting : c.bosehubbard.critical_ratio * r.setting;
  r.prior_density_at_lambda_c = bessel_prior_pdf(r.lambda_c, c.prior);
  with_channel_family(c, [&](auto&& make_channel) {
    // Keep the Ising total field positive.
    const double floor = c.model == ModelKind::ising ? 1e-3 * c.coupling - r.setting : -std::numeric_limits<double>::infinity();
    const auto samples = fisher_samples(make_channel, c.bounds_fit_n_list, r.setting, c.prior.lambda_min,
                                        c.prior.lambda_max, c.bounds_fit_points, r.lambda_c, floor);
    r.constants = fit_bound_constants(samples, 1.0, c.effective_dnu());
    for (int n : c.bounds_n_list) {
      const auto channel = make_channel(n);
      const double gamma = gamma_nonadaptive(prior, [&](double lambda) { return channel.fisher(lambda, r.setting); }, c.m);
      r.rows.push_back({n, gamma, van_trees_rhs(r.f0, gamma),
                        no_go_bound(r.f0, c.m, n, r.prior_density_at_lambda_c, r.constants)});
    }
    return 0;
  });
  return r;
}

inline CommandResult cmd_bounds(const CommandContext& ctx) {
  const auto& c = ctx.config;
  const auto r = compute_bounds(c);
  const auto& k = r.constants;
  CsvWriter csv({"N", "f0", "gamma_nonadaptive", "van_trees_rhs", "no_go_bound"});
  for (const auto& row : r.rows) csv.row(row.n, r.f0, row.gamma_nonadaptive, row.van_trees_rhs, row.no_go_bound);

  nlohmann::ordered_json constants;
  constants["model"] = model_name(c.model);
  constants["setting"] = r.setting;
  constants["lambda_c"] = r.lambda_c;
  constants["prior_density_at_lambda_c"] = r.prior_density_at_lambda_c;
  constants["m"] = c.m;
  constants["dnu"] = k.dnu();
  constants["alpha_c"] = k.alpha_c;
  constants["alpha_nc"] = k.alpha_nc;
  constants["C"] = k.C;

  CommandResult result;
  result.files.push_back(detail::write_file(ctx.output_dir, "bounds.csv", csv.str()));
  result.files.push_back(detail::write_file(ctx.output_dir, "bound_constants.json", constants.dump(2) + "\n"));
  return result;
}

}  // namespace critmetro

#endif  // CRITMETRO_COMMANDS_HPP
