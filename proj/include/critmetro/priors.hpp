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

#ifndef CRITMETRO_PRIORS_HPP
#define CRITMETRO_PRIORS_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "critmetro/errors.hpp"
#include "critmetro/special.hpp"

namespace critmetro {

/**
  Smooth-edged prior on [lambda_min, lambda_max]

      p(l) = (exp[alpha sin^2(pi (l - min)/(max - min))] - 1)
             / ((max - min) (e^{alpha/2} I0(alpha/2) - 1)).

  Negative alpha gives a nearly flat density that vanishes smoothly at both
  ends; alpha = 0 is degenerate (0/0) and rejected.
*/
struct BesselPrior {
  double alpha = -100.0;
  double lambda_min = 0.6;
  double lambda_max = 1.4;

  void validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(lambda_min) || !std::isfinite(lambda_max))
      throw ConfigError("BesselPrior: non-finite parameter");
    if (!(lambda_min < lambda_max)) throw ConfigError("BesselPrior: lambda_min must be < lambda_max");
    if (alpha == 0.0) throw ConfigError("BesselPrior: alpha = 0 is degenerate");
  }

  double width() const { return lambda_max - lambda_min; }
};

namespace detail {

// e^{a/2} I0(a/2) - 1, computed without overflow for large |a|.
inline double bessel_prior_normalizer(double alpha) {
  const double half = 0.5 * alpha;
  const double scaled = bessel_i0_scaled(half);  // e^{-|a/2|} I0(a/2)
  if (alpha < 0.0) return scaled - 1.0;
  return std::exp(alpha) * scaled - 1.0;
}

}  // namespace detail

inline double bessel_prior_pdf(double lambda, const BesselPrior& prior) {
  if (!std::isfinite(lambda)) throw DomainError("bessel_prior_pdf: non-finite parameter");
  prior.validate();
  if (lambda <= prior.lambda_min || lambda >= prior.lambda_max) return 0.0;
  const double s = std::sin(std::numbers::pi * (lambda - prior.lambda_min) / prior.width());
  const double numerator = std::expm1(prior.alpha * s * s);
  const double value = numerator / (prior.width() * detail::bessel_prior_normalizer(prior.alpha));
  return value > 0.0 ? value : 0.0;
}

/**
  Discretized density on a uniform cell-centred grid over [lower, upper].

  Point i sits at lower + (i + 1/2) * spacing; weights are density values, so
  a normalized grid satisfies sum(weights) * spacing = 1. All quadratures
  in the library are midpoint sums on this layout.
*/
class ParameterGrid {
 public:
  ParameterGrid(double lower, double upper, std::vector<double> weights)
      : lower_(lower), upper_(upper), weights_(std::move(weights)) {
    if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper))
      throw ConfigError("ParameterGrid: need finite lower < upper");
    if (weights_.empty()) throw ConfigError("ParameterGrid: empty grid");
    spacing_ = (upper_ - lower_) / static_cast<double>(weights_.size());
    points_.resize(weights_.size());
    for (std::size_t i = 0; i < points_.size(); ++i)
      points_[i] = lower_ + (static_cast<double>(i) + 0.5) * spacing_;
    for (double w : weights_)
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("ParameterGrid: weights must be finite and >= 0");
  }

  /// Grid whose weights are `density` evaluated at the cell centres, normalized.
  template <class Density>
  static ParameterGrid from_density(double lower, double upper, std::size_t n_points, Density&& density) {
    if (n_points == 0) throw ConfigError("ParameterGrid: n_points must be positive");
    std::vector<double> w(n_points);
    const double h = (upper - lower) / static_cast<double>(n_points);
    for (std::size_t i = 0; i < n_points; ++i) w[i] = density(lower + (static_cast<double>(i) + 0.5) * h);
    ParameterGrid grid(lower, upper, std::move(w));
    grid.normalize();
    return grid;
  }

  std::size_t size() const { return weights_.size(); }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double spacing() const { return spacing_; }
  double point(std::size_t i) const { return points_[i]; }
  std::span<const double> points() const { return points_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> mutable_weights() { return weights_; }

  double total_mass() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s * spacing_;
  }

  bool is_normalized(double tol = 1e-9) const { return std::fabs(total_mass() - 1.0) <= tol; }

  void normalize() {
    const double mass = total_mass();
    if (!(mass > 0.0) || !std::isfinite(mass)) throw StateError("ParameterGrid: cannot normalize zero or non-finite mass");
    for (double& w : weights_) w /= mass;
  }

 private:
  double lower_;
  double upper_;
  double spacing_ = 0.0;
  std::vector<double> points_;
  std::vector<double> weights_;
};

inline constexpr std::size_t kMinGridPoints = 16;
inline constexpr std::size_t kDefaultGridPoints = 1000;

inline ParameterGrid grid_from_prior(const BesselPrior& prior, std::size_t n_points = kDefaultGridPoints) {
  prior.validate();
  if (n_points < kMinGridPoints)
    throw ConfigError("grid_from_prior: n_points must be >= " + std::to_string(kMinGridPoints));
  return ParameterGrid::from_density(prior.lambda_min, prior.lambda_max, n_points,
                                     [&](double l) { return bessel_prior_pdf(l, prior); });
}

/// Inverse-CDF draw from the grid density with uniform jitter inside the
/// selected cell, so draws never coincide with grid nodes.
template <class URBG>
double sample_parameter(const ParameterGrid& grid, URBG& rng) {
  if (!grid.is_normalized()) throw StateError("sample_parameter: grid is not normalized");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double jitter = unit(rng) - 0.5;
  const auto w = grid.weights();
  const double h = grid.spacing();
  std::size_t cell = w.size() - 1;
  double cdf = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    cdf += w[i] * h;
    if (u < cdf && w[i] > 0.0) {
      cell = i;
      break;
    }
  }
  // Guard against roundoff leaving u above the accumulated total.
  while (w[cell] <= 0.0 && cell > 0) --cell;
  return grid.point(cell) + jitter * h;
}

}  // namespace critmetro

#endif  // CRITMETRO_PRIORS_HPP
