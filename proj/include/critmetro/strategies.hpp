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

#ifndef CRITMETRO_STRATEGIES_HPP
#define CRITMETRO_STRATEGIES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "critmetro/errors.hpp"
#include "critmetro/inference.hpp"

namespace critmetro {

/// Fixed control, never looks at the data.
struct NonAdaptive {
  double setting = 0.0;
};

/**
  Measure at `initial_setting` until the posterior standard deviation drops
  below `threshold` (or, when `epsilon` is set, until ceil(epsilon m)
  measurements are done), then retune once to the control law evaluated at
  the posterior mean of that moment and keep it.
*/
struct TwoStep {
  double initial_setting = 0.0;
  double threshold = 0.0;
  std::optional<double> epsilon;

  bool switched = false;
  double switch_setting = 0.0;
};

/// Retune after every measurement so the believed parameter sits at the critical point.
struct RealTime {};

struct ControlLimits {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  double clamp(double s) const { return std::clamp(s, lower, upper); }
};

class Strategy {
 public:
  using Policy = std::variant<NonAdaptive, TwoStep, RealTime>;

  explicit Strategy(Policy policy, ControlLimits limits = {}) : policy_(std::move(policy)), limits_(limits) {
    if (!(limits_.lower <= limits_.upper)) throw ConfigError("Strategy: control limits are inverted");
    if (const auto* t = std::get_if<TwoStep>(&policy_)) {
      if (!(t->threshold > 0.0)) throw ConfigError("TwoStep: threshold must be > 0");
      if (t->epsilon && !(*t->epsilon > 0.0 && *t->epsilon < 1.0)) throw ConfigError("TwoStep: epsilon must lie in (0, 1)");
    }
  }

  static Strategy non_adaptive(double setting, ControlLimits limits = {}) { return Strategy(NonAdaptive{setting}, limits); }
  static Strategy two_step(double initial_setting, double threshold, std::optional<double> epsilon = std::nullopt,
                           ControlLimits limits = {}) {
    return Strategy(TwoStep{initial_setting, threshold, epsilon}, limits);
  }
  static Strategy real_time(ControlLimits limits = {}) { return Strategy(RealTime{}, limits); }

  const Policy& policy() const { return policy_; }
  const ControlLimits& limits() const { return limits_; }

  std::string_view name() const {
    return std::visit(
        [](const auto& p) -> std::string_view {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, NonAdaptive>) return "nonadaptive";
          else if constexpr (std::is_same_v<T, TwoStep>) return "twostep";
          else return "realtime";
        },
        policy_);
  }

  bool switched() const {
    const auto* t = std::get_if<TwoStep>(&policy_);
    return t && t->switched;
  }

  /// Clear per-trajectory state.
  void reset() {
    if (auto* t = std::get_if<TwoStep>(&policy_)) {
      t->switched = false;
      t->switch_setting = 0.0;
    }
  }

  /**
    Setting for the next measurement. `control_law` maps a parameter
    estimate to the setting that makes it critical. `completed` is the
    number of measurements already folded into `posterior`, `total` the
    planned count (both only used by the epsilon variant of TwoStep).
  */
  template <class ControlLaw>
  double next_setting(const PosteriorGrid& posterior, ControlLaw&& control_law, int completed = 0, int total = 0) {
    return std::visit(
        [&](auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, NonAdaptive>) {
            return limits_.clamp(p.setting);
          } else if constexpr (std::is_same_v<T, TwoStep>) {
            if (!p.switched) {
              const bool trigger = p.epsilon ? completed >= static_cast<int>(std::ceil(*p.epsilon * total))
                                             : posterior_std(posterior) < p.threshold;
              if (!trigger) return limits_.clamp(p.initial_setting);
              p.switched = true;
              p.switch_setting = limits_.clamp(control_law(posterior_mean(posterior)));
            }
            return p.switch_setting;
          } else {
            return limits_.clamp(control_law(posterior_mean(posterior)));
          }
        },
        policy_);
  }

 private:
  Policy policy_;
  ControlLimits limits_;
};

/// Two-step trigger width coeff / N^{d nu}.
inline double two_step_threshold(double coeff, double n, double d, double nu) {
  if (!(coeff > 0.0 && n > 0.0 && d > 0.0 && nu > 0.0)) throw ConfigError("two_step_threshold: inputs must be positive");
  return coeff / std::pow(n, d * nu);
}

struct SampleBudgetReport {
  double ratio = 0.0;
  bool feasible = false;
};

/// Two-step protocols need m >> N^{2/(d nu) - 1/2}; reports m over that scale.
inline SampleBudgetReport two_step_sample_budget_check(double m, double n, double d, double nu) {
  if (!(m > 0.0 && n > 0.0 && d > 0.0 && nu > 0.0)) throw ConfigError("two_step_sample_budget_check: inputs must be positive");
  const double scale = std::pow(n, 2.0 / (d * nu) - 0.5);
  SampleBudgetReport r;
  r.ratio = m / scale;
  r.feasible = r.ratio >= 1.0;
  return r;
}

}  // namespace critmetro

#endif  // CRITMETRO_STRATEGIES_HPP
