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

#ifndef CRITMETRO_SIMULATOR_HPP
#define CRITMETRO_SIMULATOR_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "critmetro/errors.hpp"
#include "critmetro/inference.hpp"
#include "critmetro/priors.hpp"
#include "critmetro/strategies.hpp"

namespace critmetro {

using RandomStream = std::mt19937_64;

/**
  A parametrized measurement: unknown lambda, scalar control setting,
  scalar outcome. `control` is the critical-point law (estimate -> setting)
  and `fisher` the classical Fisher information of one outcome.
*/
template <class C>
concept MeasurementChannel = requires(const C& c, double v, RandomStream& rng, std::span<const double> in,
                                      std::span<double> out) {
  { c.control(v) } -> std::convertible_to<double>;
  { c.sample(v, v, rng) } -> std::convertible_to<double>;
  c.likelihood(in, v, v, out);
  c.log_likelihood(in, v, v, out);
  { c.fisher(v, v) } -> std::convertible_to<double>;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of trajectory `index` in an ensemble; a keyed hash, so the stream
/// depends on (master_seed, index) only and never on scheduling.
inline std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Stream that draws the true parameter of a trajectory (separate from the outcome stream).
inline RandomStream truth_stream(std::uint64_t seed) { return RandomStream(splitmix64(seed ^ 0xd1b54a32d192ed03ULL)); }

struct StepRecord {
  double setting = 0.0;
  double outcome = 0.0;
  double estimate = 0.0;
  double posterior_std = 0.0;
};

struct Trajectory {
  std::uint64_t seed = 0;
  double truth = 0.0;
  std::vector<StepRecord> steps;
  PosteriorGrid final_posterior;
  bool failed = false;
  std::string failure;
  /// sum_k int p(l | x_{k-1}) F(l, s_k) dl; NaN unless requested.
  double gamma = std::numeric_limits<double>::quiet_NaN();
};

/// Posterior cells below this probability mass are skipped in the Gamma quadrature.
inline constexpr double kGammaMassCutoff = 1e-13;

/// Per-worker scratch: likelihood buffer plus F(lambda_i, s) cached for the last setting.
class TrajectoryWorkspace {
 public:
  template <MeasurementChannel C>
  double gamma_term(const C& channel, const PosteriorGrid& posterior, double setting) {
    if (fisher_.size() != posterior.size() || setting != cached_setting_) {
      fisher_.assign(posterior.size(), std::numeric_limits<double>::quiet_NaN());
      cached_setting_ = setting;
    }
    const auto w = posterior.weights();
    const double h = posterior.spacing();
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] * h < kGammaMassCutoff) continue;
      if (std::isnan(fisher_[i])) fisher_[i] = channel.fisher(posterior.point(i), setting);
      s += w[i] * fisher_[i];
    }
    return s * h;
  }

  std::vector<double> buffer;

 private:
  double cached_setting_ = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> fisher_;
};

struct TrajectoryOptions {
  bool compute_gamma = false;
};

/**
  One measurement record: for k = 1..m ask the strategy for s_k, draw x_k
  from the channel at (truth, s_k), fold it into the posterior (log-space
  retry if the evidence underflows), and record the posterior mean and std.
  A second underflow marks the trajectory failed and stops it.
*/
template <MeasurementChannel C>
Trajectory run_trajectory(const C& channel, Strategy strategy, const ParameterGrid& prior, double truth, int m,
                          std::uint64_t seed, TrajectoryOptions options, TrajectoryWorkspace& work) {
  if (m < 1) throw ConfigError("run_trajectory: m must be >= 1");
  if (!prior.is_normalized()) throw StateError("run_trajectory: prior grid is not normalized");
  strategy.reset();
  RandomStream rng(seed);
  Trajectory traj{seed, truth, {}, prior, false, {}, std::numeric_limits<double>::quiet_NaN()};
  traj.steps.reserve(m);
  auto& posterior = traj.final_posterior;
  work.buffer.resize(prior.size());
  double gamma = 0.0;
  const auto law = [&](double estimate) { return channel.control(estimate); };

  for (int k = 0; k < m; ++k) {
    const double setting = strategy.next_setting(posterior, law, k, m);
    if (options.compute_gamma) gamma += work.gamma_term(channel, posterior, setting);
    const double outcome = channel.sample(truth, setting, rng);
    try {
      channel.likelihood(posterior.points(), setting, outcome, work.buffer);
      bayes_update(posterior, work.buffer);
    } catch (const DegenerateUpdateError&) {
      try {
        channel.log_likelihood(posterior.points(), setting, outcome, work.buffer);
        bayes_update_log(posterior, work.buffer);
      } catch (const DegenerateUpdateError& e) {
        traj.failed = true;
        traj.failure = e.what();
        break;
      }
    }
    traj.steps.push_back({setting, outcome, posterior_mean(posterior), posterior_std(posterior)});
  }
  if (options.compute_gamma) traj.gamma = gamma;
  return traj;
}

template <MeasurementChannel C>
Trajectory run_trajectory(const C& channel, const Strategy& strategy, const ParameterGrid& prior, double truth, int m,
                          std::uint64_t seed, TrajectoryOptions options = {}) {
  TrajectoryWorkspace work;
  return run_trajectory(channel, strategy, prior, truth, m, seed, options, work);
}

struct TrajectorySummary {
  std::uint64_t seed = 0;
  double truth = 0.0;
  double estimate = 0.0;
  double posterior_variance = 0.0;
  double gamma = 0.0;
  bool failed = false;
};

struct EnsembleOptions {
  int jobs = 1;
  bool compute_gamma = true;
  /// Maps (master_seed, index) to the trajectory seed.
  std::function<std::uint64_t(std::uint64_t, std::uint64_t)> seed_of = trajectory_seed;
  /// Called from worker threads as trajectories finish.
  std::function<void(std::size_t, std::size_t)> progress;
};

struct Ensemble {
  int m = 0;
  std::vector<TrajectorySummary> trajectories;
  EmsdEstimate emsd;
  std::size_t failures = 0;
  double f0 = 0.0;
  double gamma_hat = std::numeric_limits<double>::quiet_NaN();
  double gamma_standard_error = std::numeric_limits<double>::quiet_NaN();

  double emsd_inverse() const { return 1.0 / emsd.value; }
  double emsd_inverse_standard_error() const { return emsd.standard_error / (emsd.value * emsd.value); }
  double failure_rate() const { return static_cast<double>(failures) / static_cast<double>(trajectories.size()); }
};

namespace detail {

inline double mean_and_standard_error(std::span<const double> v, double& standard_error) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  standard_error = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return mean;
}

// Runs body(i, workspace) for i in [0, count) on `jobs` threads.
template <class Body>
void parallel_for(std::size_t count, int jobs, Body&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    TrajectoryWorkspace work;
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i, work);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/**
  n_traj independent trajectories; trajectory i draws its true parameter
  from the prior and its outcomes from streams seeded by seed_of(master, i).
  Results are reduced in index order, so they do not depend on `jobs`.
  Failed trajectories are counted and left out of the EMSD.
*/
template <MeasurementChannel C>
Ensemble run_ensemble(const C& channel, const Strategy& strategy, std::size_t n_traj, int m, std::uint64_t master_seed,
                      const ParameterGrid& prior, const EnsembleOptions& options = {}) {
  if (n_traj < 2) throw ConfigError("run_ensemble: need at least 2 trajectories");
  if (m < 0) throw ConfigError("run_ensemble: m must be >= 0");
  Ensemble out;
  out.m = m;
  out.trajectories.resize(n_traj);
  const double prior_mean = posterior_mean(prior);
  const double prior_var = posterior_variance(prior);
  std::atomic<std::size_t> done{0};

  detail::parallel_for(n_traj, options.jobs, [&](std::size_t i, TrajectoryWorkspace& work) {
    const std::uint64_t seed = options.seed_of(master_seed, i);
    auto truth_rng = truth_stream(seed);
    const double truth = sample_parameter(prior, truth_rng);
    TrajectorySummary s{seed, truth, prior_mean, prior_var, 0.0, false};
    if (m > 0) {
      const auto traj = run_trajectory(channel, strategy, prior, truth, m, seed, {options.compute_gamma}, work);
      s.failed = traj.failed;
      s.estimate = posterior_mean(traj.final_posterior);
      s.posterior_variance = posterior_variance(traj.final_posterior);
      if (options.compute_gamma) s.gamma = traj.gamma;
    }
    out.trajectories[i] = s;
    if (options.progress) options.progress(++done, n_traj);
  });

  std::vector<EstimateRecord> records;
  std::vector<double> gammas;
  for (const auto& t : out.trajectories) {
    if (t.failed) {
      ++out.failures;
      continue;
    }
    records.push_back({t.truth, t.estimate, t.posterior_variance});
    gammas.push_back(t.gamma);
  }
  if (records.size() < 2) throw NumericalError("run_ensemble: all (or all but one) trajectories failed");
  out.emsd = emsd(records);
  out.f0 = prior_fisher(prior);
  if (options.compute_gamma) out.gamma_hat = detail::mean_and_standard_error(gammas, out.gamma_standard_error);
  return out;
}

struct VanTreesCheck {
  double observed = 0.0;  // EMSD^{-1}
  double bound = 0.0;     // F0 + Gamma_hat
  double tolerance = 0.0; // sigmas * combined standard error
  bool holds = false;
};

/// EMSD^{-1} <= F0 + Gamma_hat + sigmas * sqrt(se(EMSD^{-1})^2 + se(Gamma_hat)^2).
inline VanTreesCheck check_van_trees(const Ensemble& e, double sigmas = 3.0) {
  if (std::isnan(e.gamma_hat)) throw StateError("check_van_trees: ensemble ran without Gamma estimation");
  VanTreesCheck c;
  c.observed = e.emsd_inverse();
  c.bound = van_trees_rhs(e.f0, e.gamma_hat);
  c.tolerance = sigmas * std::hypot(e.emsd_inverse_standard_error(), e.gamma_standard_error);
  c.holds = c.observed <= c.bound + c.tolerance;
  return c;
}

struct EmsdRow {
  int n = 0;
  int m = 0;
  std::size_t n_traj = 0;
  Ensemble ensemble;
};

/// EMSD against system size. All rows share master_seed (common random numbers).
template <class ChannelFactory, class StrategyFactory>
std::vector<EmsdRow> emsd_vs_n(ChannelFactory&& make_channel, StrategyFactory&& make_strategy, std::span<const int> ns,
                               int m, std::size_t n_traj, std::uint64_t master_seed, const ParameterGrid& prior,
                               const EnsembleOptions& options = {}) {
  std::vector<EmsdRow> rows;
  for (int n : ns) {
    const auto channel = make_channel(n);
    rows.push_back({n, m, n_traj, run_ensemble(channel, make_strategy(n), n_traj, m, master_seed, prior, options)});
  }
  return rows;
}

/// EMSD against the number of measurements at fixed size n.
template <MeasurementChannel C>
std::vector<EmsdRow> emsd_vs_m(const C& channel, const Strategy& strategy, std::span<const int> ms, int n,
                               std::size_t n_traj, std::uint64_t master_seed, const ParameterGrid& prior,
                               const EnsembleOptions& options = {}) {
  std::vector<EmsdRow> rows;
  for (int m : ms) rows.push_back({n, m, n_traj, run_ensemble(channel, strategy, n_traj, m, master_seed, prior, options)});
  return rows;
}

struct ScalingFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double exponent_standard_error = 0.0;
  double residual_norm = 0.0;
};

/// Ordinary least squares of log(value) on log(N).
inline ScalingFit scaling_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw InputError("scaling_fit: need at least 3 points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw InputError("scaling_fit: values must be positive");
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (std::log(x) - mx) * (std::log(x) - mx);
    sxy += (std::log(x) - mx) * (std::log(y) - my);
  }
  if (!(sxx > 0.0)) throw InputError("scaling_fit: need at least two distinct N");
  ScalingFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double rss = 0.0;
  for (const auto& [x, y] : points) {
    const double r = std::log(y) - (fit.intercept + fit.exponent * std::log(x));
    rss += r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  fit.exponent_standard_error = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

/// Fit of EMSD^{-1} against N over the rows of an emsd_vs_n table.
inline ScalingFit inverse_emsd_fit(std::span<const EmsdRow> rows) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) pts.emplace_back(r.n, r.ensemble.emsd_inverse());
  return scaling_fit(pts);
}

}  // namespace critmetro

#endif  // CRITMETRO_SIMULATOR_HPP
