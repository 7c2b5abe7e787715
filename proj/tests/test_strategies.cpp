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

#include "critmetro/strategies.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <vector>

#include "critmetro/ising.hpp"
#include "critmetro/priors.hpp"

namespace critmetro {
namespace {

// Two equal masses at mean -/+ sd: standard deviation exactly sd.
PosteriorGrid with_std(double mean, double sd) {
  ParameterGrid g(mean - 2 * sd, mean + 2 * sd, {1.0, 1.0});
  g.normalize();
  return g;
}

const auto ising_law = [](double estimate) { return critical_control(estimate, 1.0); };

TEST(NonAdaptive, IgnoresThePosterior) {
  auto s = Strategy::non_adaptive(0.1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 0.5), c(0.6, 1.4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(s.next_setting(with_std(c(rng), u(rng)), ising_law, i, 100), 0.1);
  EXPECT_EQ(s.name(), "nonadaptive");
}

TEST(RealTime, PlacesEstimateAtCriticality) {
  auto s = Strategy::real_time();
  EXPECT_NEAR(s.next_setting(with_std(1.3, 0.01), ising_law), -0.3, 1e-12);
  for (double est : {0.7, 1.0, 1.21}) EXPECT_NEAR(est + s.next_setting(with_std(est, 0.05), ising_law), 1.0, 1e-12);
  EXPECT_EQ(s.name(), "realtime");
}

TEST(TwoStep, ThresholdFromSystemSize) {
  EXPECT_DOUBLE_EQ(two_step_threshold(3.0, 40.0, 1.0, 1.0), 0.075);
  EXPECT_DOUBLE_EQ(two_step_threshold(3.0, 16.0, 1.0, 2.0), 3.0 / 256.0);
  EXPECT_THROW(two_step_threshold(0.0, 40.0, 1.0, 1.0), ConfigError);
}

TEST(TwoStep, SwitchesOnceWhenStdDropsBelowThreshold) {
  auto s = Strategy::two_step(0.05, two_step_threshold(3.0, 40.0, 1.0, 1.0));
  EXPECT_EQ(s.next_setting(with_std(1.1, 0.08), ising_law), 0.05);
  EXPECT_FALSE(s.switched());
  const double switched = s.next_setting(with_std(1.1, 0.07), ising_law);
  EXPECT_TRUE(s.switched());
  EXPECT_NEAR(switched, -0.1, 1e-12);
  // Later posteriors no longer move the setting.
  EXPECT_EQ(s.next_setting(with_std(0.8, 0.01), ising_law), switched);
  EXPECT_EQ(s.next_setting(with_std(1.3, 0.2), ising_law), switched);
  s.reset();
  EXPECT_FALSE(s.switched());
  EXPECT_EQ(s.next_setting(with_std(1.1, 0.08), ising_law), 0.05);
}

TEST(TwoStep, AtMostTwoDistinctSettings) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sd(0.01, 0.2), c(0.6, 1.4);
  auto s = Strategy::two_step(0.0, 0.1);
  std::set<double> seen;
  for (int i = 0; i < 200; ++i) seen.insert(s.next_setting(with_std(c(rng), sd(rng)), ising_law));
  EXPECT_LE(seen.size(), 2u);
}

TEST(TwoStep, EpsilonFractionVariant) {
  auto s = Strategy::two_step(0.0, 1e-9, 0.25);
  const auto post = with_std(1.2, 0.5);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(s.next_setting(post, ising_law, k, 24), 0.0) << k;
  EXPECT_NEAR(s.next_setting(post, ising_law, 6, 24), -0.2, 1e-12);
  EXPECT_TRUE(s.switched());
}

TEST(Strategy, InvalidParameters) {
  EXPECT_THROW(Strategy::two_step(0.0, 0.0), ConfigError);
  EXPECT_THROW(Strategy::two_step(0.0, 0.1, 1.5), ConfigError);
  EXPECT_THROW(Strategy::real_time(ControlLimits{1.0, -1.0}), ConfigError);
}

TEST(ControlLimits, ClampAppliesToEveryPolicy) {
  const ControlLimits lim{-0.2, 0.2};
  auto rt = Strategy::real_time(lim);
  EXPECT_EQ(rt.next_setting(with_std(1.35, 0.01), ising_law), -0.2);
  EXPECT_EQ(rt.next_setting(with_std(0.65, 0.01), ising_law), 0.2);
  auto na = Strategy::non_adaptive(0.9, lim);
  EXPECT_EQ(na.next_setting(with_std(1.0, 0.1), ising_law), 0.2);
  auto ts = Strategy::two_step(0.0, 0.5, std::nullopt, lim);
  EXPECT_EQ(ts.next_setting(with_std(1.39, 0.01), ising_law), -0.2);
}

TEST(SampleBudget, Examples) {
  const auto a = two_step_sample_budget_check(64, 16, 1, 1);
  EXPECT_DOUBLE_EQ(a.ratio, 1.0);
  EXPECT_TRUE(a.feasible);
  const auto b = two_step_sample_budget_check(10, 100, 1, 2);
  EXPECT_DOUBLE_EQ(b.ratio, 1.0);
  const auto c = two_step_sample_budget_check(24, 40, 1, 1);
  EXPECT_LT(c.ratio, 1.0);
  EXPECT_FALSE(c.feasible);
}

}  // namespace
}  // namespace critmetro
