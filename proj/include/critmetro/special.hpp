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

#ifndef CRITMETRO_SPECIAL_HPP
#define CRITMETRO_SPECIAL_HPP

#include <cmath>
#include <numbers>

#include "critmetro/errors.hpp"

namespace critmetro {

namespace detail {

inline constexpr double kBesselSeriesLimit = 30.0;

// Power series sum_k (x^2/4)^k / (k!)^2. All terms positive.
inline double bessel_i0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// Asymptotic series of sqrt(2 pi x) e^{-x} I0(x) for large x > 0:
// sum_k ((2k-1)!!)^2 / (k! 8^k x^k).
inline double bessel_i0_asymptotic_scaled(double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
    if (next >= term) break;  // series starts to diverge
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

}  // namespace detail

/// Exponentially scaled modified Bessel function e^{-|x|} I0(x).
inline double bessel_i0_scaled(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_i0_scaled: non-finite argument");
  const double ax = std::fabs(x);
  if (ax <= detail::kBesselSeriesLimit) return std::exp(-ax) * detail::bessel_i0_series(ax);
  return detail::bessel_i0_asymptotic_scaled(ax);
}

/// Modified Bessel function of the first kind, order zero.
/// Overflows to +inf for |x| beyond ~713, like std::exp.
inline double bessel_i0(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_i0: non-finite argument");
  const double ax = std::fabs(x);
  if (ax <= detail::kBesselSeriesLimit) return detail::bessel_i0_series(ax);
  return std::exp(ax) * detail::bessel_i0_asymptotic_scaled(ax);
}

}  // namespace critmetro

#endif  // CRITMETRO_SPECIAL_HPP
