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

#ifndef CRITMETRO_INFERENCE_HPP
#define CRITMETRO_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "critmetro/errors.hpp"
#include "critmetro/priors.hpp"

namespace critmetro {

/// Posterior p(lambda | x_1..x_k) on the same layout as the prior grid.
using PosteriorGrid = ParameterGrid;

/// Multiply by the likelihood values at the grid points and divide by the
/// evidence sum_i w_i L_i spacing. Returns the evidence.
inline double bayes_update(PosteriorGrid& posterior, std::span<const double> likelihood) {
  if (likelihood.size() != posterior.size()) throw InputError("bayes_update: likelihood size mismatch");
  auto w = posterior.mutable_weights();
  double evidence = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(likelihood[i] >= 0.0)) throw InputError("bayes_update: likelihood must be >= 0");
    evidence += w[i] * likelihood[i];
  }
  evidence *= posterior.spacing();
  if (!(evidence > 0.0) || !std::isfinite(evidence))
    throw DegenerateUpdateError("bayes_update: evidence vanished on the grid");
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = w[i] * likelihood[i] / evidence;
  return evidence;
}

/// Same update from log-likelihoods, shifted by their maximum over the
/// support of the current posterior so sharp likelihoods cannot underflow.
inline void bayes_update_log(PosteriorGrid& posterior, std::span<const double> log_likelihood) {
  if (log_likelihood.size() != posterior.size()) throw InputError("bayes_update_log: likelihood size mismatch");
  auto w = posterior.mutable_weights();
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) shift = std::max(shift, std::log(w[i]) + log_likelihood[i]);
  if (!std::isfinite(shift)) throw DegenerateUpdateError("bayes_update_log: outcome impossible on the whole grid");
  double mass = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = w[i] > 0.0 ? std::exp(std::log(w[i]) + log_likelihood[i] - shift) : 0.0;
    mass += w[i];
  }
  mass *= posterior.spacing();
  if (!(mass > 0.0) || !std::isfinite(mass)) throw DegenerateUpdateError("bayes_update_log: zero posterior mass");
  for (double& x : w) x /= mass;
}

inline double posterior_mean(const PosteriorGrid& posterior) {
  const auto w = posterior.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += posterior.point(i) * w[i];
  return s * posterior.spacing();
}

inline double posterior_variance(const PosteriorGrid& posterior) {
  const double mean = posterior_mean(posterior);
  const auto w = posterior.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = posterior.point(i) - mean;
    s += d * d * w[i];
  }
  return s * posterior.spacing();
}

inline double posterior_std(const PosteriorGrid& posterior) { return std::sqrt(posterior_variance(posterior)); }

/// Cells below this fraction of the peak weight are left out of F0.
inline constexpr double kPriorFisherCutoff = 1e-12;

/**
  Prior Fisher functional F0 = int p0 (d log p0)^2, midpoint rule with
  central differences of log p0. Cells whose neighbours fall below the
  cutoff are skipped; for densities vanishing smoothly at the edges the
  integrand tends to a finite limit there, so the loss is O(spacing).
*/
inline double prior_fisher(const ParameterGrid& grid) {
  const auto w = grid.weights();
  const double peak = *std::max_element(w.begin(), w.end());
  const double floor = kPriorFisherCutoff * peak;
  const double h = grid.spacing();
  double f0 = 0.0;
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    if (w[i] < floor || w[i - 1] < floor || w[i + 1] < floor) continue;
    const double dlog = (std::log(w[i + 1]) - std::log(w[i - 1])) / (2.0 * h);
    f0 += w[i] * dlog * dlog;
  }
  return f0 * h;
}

struct EmsdEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  /// Mean posterior variance; equals `value` in expectation for a calibrated posterior.
  double mean_posterior_variance = 0.0;
  std::size_t count = 0;
};

/// One finished trajectory as seen by the EMSD estimator.
struct EstimateRecord {
  double truth = 0.0;
  double estimate = 0.0;
  double posterior_variance = 0.0;
};

/**
  Monte Carlo EMSD: mean over trajectories of (posterior mean - truth)^2,
  with the sample standard error. With the truth drawn from the prior this
  is an unbiased estimate of int dx p(x) int dl p(l|x) (l~(x) - l)^2.
*/
inline EmsdEstimate emsd(std::span<const EstimateRecord> records) {
  if (records.empty()) throw InputError("emsd: empty ensemble");
  const double n = static_cast<double>(records.size());
  double mean = 0.0;
  double var_mean = 0.0;
  for (const auto& r : records) {
    const double e = r.estimate - r.truth;
    mean += e * e;
    var_mean += r.posterior_variance;
  }
  mean /= n;
  double ss = 0.0;
  for (const auto& r : records) {
    const double e = r.estimate - r.truth;
    ss += (e * e - mean) * (e * e - mean);
  }
  EmsdEstimate out;
  out.value = mean;
  out.standard_error = records.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : std::numeric_limits<double>::quiet_NaN();
  out.mean_posterior_variance = var_mean / n;
  out.count = records.size();
  return out;
}

/// EMSD from (truth, final posterior) pairs.
inline EmsdEstimate emsd(std::span<const double> truths, std::span<const PosteriorGrid> posteriors) {
  if (truths.size() != posteriors.size()) throw InputError("emsd: size mismatch");
  if (truths.empty()) throw InputError("emsd: empty ensemble");
  std::vector<EstimateRecord> records;
  records.reserve(truths.size());
  for (std::size_t i = 0; i < truths.size(); ++i)
    records.push_back({truths[i], posterior_mean(posteriors[i]), posterior_variance(posteriors[i])});
  return emsd(records);
}

/// Van Trees: EMSD^{-1} <= F0 + Gamma.
inline double van_trees_rhs(double f0, double gamma) { return f0 + gamma; }

/// Non-adaptive information budget m * int p0(l) F(l, s0) dl.
template <class FisherFn>
double gamma_nonadaptive(const ParameterGrid& prior, FisherFn&& fisher, int m) {
  if (m < 1) throw ConfigError("gamma_nonadaptive: m must be >= 1");
  const auto w = prior.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) s += w[i] * fisher(prior.point(i));
  return m * s * prior.spacing();
}

/// Finite-size scaling constants: F at criticality ~ alpha_c N^{2/(d nu)},
/// off-critical F <= alpha_nc N, critical width Delta_c = C N^{-1/(d nu)}.
struct BoundConstants {
  double alpha_c = 0.0;
  double alpha_nc = 0.0;
  double C = 0.0;
  double d = 1.0;
  double nu = 1.0;

  double dnu() const { return d * nu; }
  double critical_width(double n) const { return C * std::pow(n, -1.0 / dnu()); }
};

/// Upper bound on EMSD^{-1} for any non-adaptive strategy:
/// F0 + m N (alpha_nc + C alpha_c p0(lambda_c) N^{(1 - d nu)/(d nu)}).
inline double no_go_bound(double f0, int m, double n, double p0_at_critical, const BoundConstants& k) {
  if (!(k.alpha_c > 0.0 && k.alpha_nc > 0.0 && k.C > 0.0 && k.d > 0.0 && k.nu > 0.0))
    throw ConfigError("no_go_bound: constants must be positive");
  const double exponent = (1.0 - k.dnu()) / k.dnu();
  return f0 + m * n * (k.alpha_nc + k.C * k.alpha_c * p0_at_critical * std::pow(n, exponent));
}

struct FisherSample {
  double lambda = 0.0;
  int n = 0;
  double fisher = 0.0;
};

/**
  Fit BoundConstants from Fisher information sweeps over lambda at several N.

  Per N the sweep's maximum and its half-width at half-maximum (linear
  interpolation of the crossings) are located. alpha_c is the geometric
  mean of peak / N^{2/(d nu)}; C the mean of HWHM * N^{1/(d nu)}; alpha_nc
  the largest F/N among samples outside the fitted critical window.
*/
inline BoundConstants fit_bound_constants(std::span<const FisherSample> samples, double d, double nu) {
  if (!(d > 0.0 && nu > 0.0)) throw ConfigError("fit_bound_constants: d and nu must be positive");
  std::map<int, std::vector<FisherSample>> by_n;
  for (const auto& s : samples) by_n[s.n].push_back(s);
  if (by_n.size() < 3) throw InputError("fit_bound_constants: need samples at >= 3 values of N");

  const double dnu = d * nu;
  double log_alpha_c = 0.0;
  double c_sum = 0.0;
  std::map<int, double> peak_location;
  for (auto& [n, sweep] : by_n) {
    std::sort(sweep.begin(), sweep.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
    if (sweep.size() < 3) throw InputError("fit_bound_constants: sweep too short");
    std::size_t top = 0;
    for (std::size_t i = 1; i < sweep.size(); ++i)
      if (sweep[i].fisher > sweep[top].fisher) top = i;
    const double peak = sweep[top].fisher;
    if (!(peak > 0.0)) throw InputError("fit_bound_constants: nonpositive peak");
    const double half = 0.5 * peak;

    auto crossing = [&](std::size_t inside, std::size_t outside) {
      const double f1 = sweep[inside].fisher, f2 = sweep[outside].fisher;
      const double t = (f1 - half) / (f1 - f2);
      return sweep[inside].lambda + t * (sweep[outside].lambda - sweep[inside].lambda);
    };
    std::vector<double> widths;
    for (std::size_t i = top; i > 0; --i)
      if (sweep[i - 1].fisher <= half) {
        widths.push_back(sweep[top].lambda - crossing(i, i - 1));
        break;
      }
    for (std::size_t i = top; i + 1 < sweep.size(); ++i)
      if (sweep[i + 1].fisher <= half) {
        widths.push_back(crossing(i, i + 1) - sweep[top].lambda);
        break;
      }
    if (widths.empty()) throw InputError("fit_bound_constants: peak not resolved (no half-maximum crossing)");
    double hwhm = 0.0;
    for (double w : widths) hwhm += w;
    hwhm /= static_cast<double>(widths.size());

    log_alpha_c += std::log(peak) - (2.0 / dnu) * std::log(static_cast<double>(n));
    c_sum += hwhm * std::pow(static_cast<double>(n), 1.0 / dnu);
    peak_location[n] = sweep[top].lambda;
  }

  BoundConstants k;
  k.d = d;
  k.nu = nu;
  k.alpha_c = std::exp(log_alpha_c / static_cast<double>(by_n.size()));
  k.C = c_sum / static_cast<double>(by_n.size());
  for (const auto& [n, sweep] : by_n) {
    const double window = k.critical_width(n);
    for (const auto& s : sweep)
      if (std::fabs(s.lambda - peak_location[n]) >= window) k.alpha_nc = std::max(k.alpha_nc, s.fisher / n);
  }
  if (!(k.alpha_nc > 0.0)) throw InputError("fit_bound_constants: no samples outside the critical window");
  return k;
}

}  // namespace critmetro

#endif  // CRITMETRO_INFERENCE_HPP
