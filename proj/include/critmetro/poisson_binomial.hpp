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

#ifndef CRITMETRO_POISSON_BINOMIAL_HPP
#define CRITMETRO_POISSON_BINOMIAL_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace critmetro {

/// Distribution of the number of successes among independent trials with
/// success probabilities `p`, by the O(n^2) convolution recurrence.
/// Every update is a convex combination, so the result stays in [0, 1].
inline std::vector<double> poisson_binomial(std::span<const double> p) {
  std::vector<double> dist(p.size() + 1, 0.0);
  dist[0] = 1.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double on = p[j];
    const double off = 1.0 - on;
    for (std::size_t c = j + 1; c > 0; --c) dist[c] = dist[c] * off + dist[c - 1] * on;
    dist[0] *= off;
  }
  return dist;
}

/// P(count == k) only. Runs the recurrence on whichever tail is shorter
/// (successes or failures), truncated at k.
inline double poisson_binomial_at(std::span<const double> p, std::size_t k, std::vector<double>& scratch) {
  const std::size_t n = p.size();
  if (k > n) return 0.0;
  const bool count_failures = k > n / 2;
  const std::size_t target = count_failures ? n - k : k;
  scratch.assign(target + 1, 0.0);
  scratch[0] = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double on = count_failures ? 1.0 - p[j] : p[j];
    const double off = 1.0 - on;
    const std::size_t top = j + 1 < target ? j + 1 : target;
    for (std::size_t c = top; c > 0; --c) scratch[c] = scratch[c] * off + scratch[c - 1] * on;
    scratch[0] *= off;
  }
  return scratch[target];
}

}  // namespace critmetro

#endif  // CRITMETRO_POISSON_BINOMIAL_HPP
