// Copyright 2026 The qthresh Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qthresh/policies.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qthresh/errors.hpp"
#include "test_support.hpp"

namespace qthresh {
namespace {

using testing::single_type;

constexpr PolicyKind kLearning[] = {PolicyKind::kStatic, PolicyKind::kPartialAdaptive,
                                    PolicyKind::kFullyAdaptive};

HistoryStream history_for(const Instance& inst, PolicyKind kind, std::uint64_t seed) {
  return sample_history(
      inst, kind == PolicyKind::kStatic ? HistoryMode::kRewardObserved : HistoryMode::kTypeOnly,
      seed);
}

TEST(MetaStep, AcceptsOnlyWhenRewardClearsAndCapacityCovers) {
  std::vector<double> remaining = {2.0, 1.0};
  const std::vector<double> a = {1.0, 1.0};
  EXPECT_FALSE(meta_step(remaining, a, 1.49, 1.5));
  EXPECT_EQ(remaining, (std::vector<double>{2.0, 1.0}));
  EXPECT_TRUE(meta_step(remaining, a, 1.5, 1.5));  // ties accept
  EXPECT_EQ(remaining, (std::vector<double>{1.0, 0.0}));
  EXPECT_FALSE(meta_step(remaining, a, 9.0, 1.5));  // resource 2 exhausted
  EXPECT_EQ(remaining, (std::vector<double>{1.0, 0.0}));
  EXPECT_FALSE(meta_step(remaining, a, std::numeric_limits<double>::quiet_NaN(), 0.0));
  const std::vector<double> only_first = {1.0, 0.0};
  EXPECT_TRUE(meta_step(remaining, only_first, 3.0, 1.5));
  EXPECT_EQ(remaining, (std::vector<double>{0.0, 0.0}));
}

TEST(PolicyKind, NamesRoundTrip) {
  for (PolicyKind k : {PolicyKind::kStatic, PolicyKind::kPartialAdaptive,
                       PolicyKind::kFullyAdaptive, PolicyKind::kClairvoyant,
                       PolicyKind::kFixedRule}) {
    EXPECT_EQ(parse_policy_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_policy_kind("greedy"), ConfigError);
}

TEST(RoundingBand, MatchesFormula) {
  EXPECT_NEAR(rounding_band(5000, 10000, 0.01), 0.005209894838552761, 1e-15);
  EXPECT_NEAR(rounding_band(1, 100, 0.5), 5.065687204586901, 1e-12);
  // Symmetric in t <-> T - t + 1.
  EXPECT_DOUBLE_EQ(rounding_band(10, 50, 0.1), rounding_band(41, 50, 0.1));
}

TEST(BuildStatic, HalfCapacityGivesMedianThreshold) {
  const Instance inst = single_type(100, 50.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto history = sample_history(inst, HistoryMode::kRewardObserved, seed);
    const ThresholdRule rule = build_static(inst, history);
    ASSERT_EQ(rule.service_probs.size(), 1u);
    EXPECT_NEAR(rule.service_probs[0], 0.5, 1e-6);
    EXPECT_NEAR(rule.thresholds[0], 1.5, 0.1);
  }
}

TEST(BuildStatic, CapacityRegimes) {
  const auto history = sample_history(single_type(100, 0.0), HistoryMode::kRewardObserved, 3);
  const ThresholdRule loose = build_static(single_type(100, 150.0), history);
  EXPECT_DOUBLE_EQ(loose.service_probs[0], 1.0);
  EXPECT_LT(loose.thresholds[0], 1.0);  // below every reward
  const ThresholdRule none = build_static(single_type(100, 0.0), history);
  EXPECT_DOUBLE_EQ(none.service_probs[0], 0.0);
}

TEST(BuildStatic, RejectsUnusableHistories) {
  const Instance inst = single_type(50, 10.0);
  EXPECT_THROW(build_static(inst, sample_history(inst, HistoryMode::kTypeOnly, 1)), ConfigError);

  // A type that never appears in the history has nothing to estimate from.
  Instance two = inst;
  two.types.push_back({{1.0}, RewardDist::uniform(1.0, 2.0)});
  const double p[2] = {1.0, 0.0};
  two.schedule = ArrivalSchedule::stationary(50, p);
  EXPECT_THROW(build_static(two, sample_history(two, HistoryMode::kRewardObserved, 1)),
               InvalidHistory);

  HistoryStream broken = sample_history(inst, HistoryMode::kRewardObserved, 1);
  broken.entries[7].reward.reset();
  EXPECT_THROW(build_static(inst, broken), InvalidHistory);
}

TEST(BuildClairvoyant, UniformMedian) {
  const ThresholdRule rule = build_clairvoyant(single_type(1000, 500.0));
  EXPECT_NEAR(rule.service_probs[0], 0.5, 1e-8);
  EXPECT_NEAR(rule.thresholds[0], 1.5, 1e-8);
}

TEST(RunPolicy, AcceptAllFillsCapacityInOrder) {
  const Instance inst = single_type(5, 3.0);
  const SamplePath path = sample_path(inst, 11);
  PolicyConfig config;
  config.fixed_rule = accept_all_rule(inst);
  const auto traj = run_policy(inst, path, {}, PolicyKind::kFixedRule, config);
  EXPECT_EQ(traj.decisions, (std::vector<std::uint8_t>{1, 1, 1, 0, 0}));
  EXPECT_EQ(traj.accepted, 3);
  EXPECT_DOUBLE_EQ(traj.total_reward,
                   path.entries[0].reward + path.entries[1].reward + path.entries[2].reward);
  const double expected_remaining[5] = {2.0, 1.0, 0.0, 0.0, 0.0};
  for (int t = 0; t < 5; ++t) EXPECT_DOUBLE_EQ(traj.remaining_after(t)[0], expected_remaining[t]);
}

TEST(RunPolicy, RejectAllAcceptsNothing) {
  const Instance inst = single_type(20, 20.0);
  PolicyConfig config;
  config.fixed_rule = reject_all_rule(inst);
  const auto traj = run_policy(inst, sample_path(inst, 2), {}, PolicyKind::kFixedRule, config);
  EXPECT_EQ(traj.accepted, 0);
  EXPECT_EQ(traj.total_reward, 0.0);
}

TEST(RunPolicy, InputChecks) {
  const Instance inst = single_type(20, 5.0);
  const SamplePath path = sample_path(inst, 1);
  EXPECT_THROW(run_policy(inst, path, {}, PolicyKind::kFixedRule), ConfigError);
  EXPECT_THROW(run_policy(inst, path, sample_history(inst, HistoryMode::kTypeOnly, 1),
                          PolicyKind::kStatic),
               ConfigError);
  EXPECT_THROW(run_policy(inst, path, {}, PolicyKind::kPartialAdaptive), InputError);
  EXPECT_THROW(run_policy(single_type(21, 5.0), path,
                          sample_history(inst, HistoryMode::kTypeOnly, 1),
                          PolicyKind::kPartialAdaptive),
               InputError);
  PolicyConfig bad;
  bad.kappa = 0.0;
  EXPECT_THROW(run_policy(inst, path, sample_history(inst, HistoryMode::kTypeOnly, 1),
                          PolicyKind::kFullyAdaptive, bad),
               ConfigError);
  PolicyConfig wrong_size;
  wrong_size.fixed_rule = ThresholdRule{{1.0, 1.0}, {}};
  EXPECT_THROW(run_policy(inst, path, {}, PolicyKind::kFixedRule, wrong_size), ConfigError);
}

TEST(RunPolicy, ZeroCapacityRejectsEverything) {
  const Instance inst = testing::random_instance(5, 3, 2, 200, 0.0);
  ASSERT_EQ(inst.capacities, (std::vector<double>{0.0, 0.0}));
  for (PolicyKind kind : kLearning) {
    const auto traj =
        run_policy(inst, sample_path(inst, 9), history_for(inst, kind, 10), kind);
    EXPECT_EQ(traj.accepted, 0) << to_string(kind);
  }
}

TEST(RunPolicy, StaticAcceptsAboutHalfAtHalfCapacity) {
  const Instance inst = single_type(1000, 500.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto traj =
        run_policy(inst, sample_path(inst, seed),
                   sample_history(inst, HistoryMode::kRewardObserved, seed), PolicyKind::kStatic);
    EXPECT_LE(traj.accepted, 500);
    EXPECT_GE(traj.accepted, 440);
  }
}

// Every run respects capacity, accepts only rewards at or above the
// recorded threshold, and never increases a remaining capacity.
TEST(RunPolicy, FeasibleAndConsistentOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const int m = 1 + static_cast<int>(seed % 3);
    const Instance inst = testing::random_instance(200 + seed, 3, m, 150, 0.4);
    const SamplePath path = sample_path(inst, seed);
    for (PolicyKind kind : kLearning) {
      SCOPED_TRACE(::testing::Message() << "seed " << seed << " " << to_string(kind));
      const auto traj = run_policy(inst, path, history_for(inst, kind, seed + 1000), kind);
      ASSERT_TRUE(check_feasibility(inst, path, traj));
      double reward = 0.0;
      std::vector<double> prev = inst.capacities;
      for (int t = 0; t < inst.horizon(); ++t) {
        const auto now = traj.remaining_after(t);
        for (int i = 0; i < m; ++i) {
          ASSERT_GE(now[i], -1e-9);
          ASSERT_LE(now[i], prev[i]);
          prev[i] = now[i];
        }
        if (traj.decisions[t]) {
          ASSERT_GE(path.entries[t].reward, traj.thresholds[t]);
          reward += path.entries[t].reward;
        }
      }
      EXPECT_NEAR(traj.total_reward, reward, 1e-9);
    }
  }
}

TEST(RunPolicy, FeasibilityAuditCatchesOverspend) {
  const Instance inst = single_type(5, 2.0);
  const SamplePath path = sample_path(inst, 1);
  PolicyTrajectory traj;
  traj.decisions = {1, 1, 1, 0, 0};
  EXPECT_FALSE(check_feasibility(inst, path, traj));
  traj.decisions = {1, 0, 0, 0, 1};
  EXPECT_TRUE(check_feasibility(inst, path, traj));
}

TEST(RunPolicy, DeterministicGivenInputs) {
  const Instance inst = testing::random_instance(77, 3, 2, 120, 0.5);
  const SamplePath path = sample_path(inst, 4);
  for (PolicyKind kind : kLearning) {
    const auto history = history_for(inst, kind, 5);
    const auto a = run_policy(inst, path, history, kind);
    const auto b = run_policy(inst, path, history, kind);
    EXPECT_EQ(a.decisions, b.decisions);
    EXPECT_EQ(a.thresholds, b.thresholds);
    EXPECT_EQ(a.total_reward, b.total_reward);
  }
}

TEST(PartialAdaptive, UpdatesBeforeDeciding) {
  const Instance inst = single_type(10, 5.0);
  const auto history = sample_history(inst, HistoryMode::kTypeOnly, 1);
  const ArrivalCounts counts = count_types(history, 1);
  AdaptiveState state = AdaptiveState::start(inst, {});
  ASSERT_TRUE(state.estimates[0].using_prior());
  const StepRecord rec = partial_adaptive_step(inst, state, counts, 0, 1.7);
  EXPECT_FALSE(state.estimates[0].using_prior());
  EXPECT_EQ(state.estimates[0].kernel().size(), 1);
  EXPECT_EQ(state.t, 1);
  ASSERT_TRUE(state.last_dual.has_value());
  // One sample at 1.7 with h = 1: the threshold is a quantile of the kernel
  // bump around it, not of the uniform prior.
  EXPECT_NEAR(rec.threshold, state.estimates[0].kernel().inverse(1.0 - rec.service_prob), 1e-12);
}

TEST(PartialAdaptive, TrueLawsGiveFixedThresholds) {
  const Instance inst = testing::random_instance(31, 3, 1, 300, 0.3);
  const SamplePath path = sample_path(inst, 8);
  const auto history = sample_history(inst, HistoryMode::kTypeOnly, 9);
  PolicyConfig config;
  config.true_cdfs = true;
  const auto traj = run_policy(inst, path, history, PolicyKind::kPartialAdaptive, config);

  // The re-solved problem never changes, so it equals one direct solve.
  const ArrivalCounts counts = count_types(history, inst.num_types());
  FluidProblem p;
  for (int j = 0; j < inst.num_types(); ++j) {
    p.weights.push_back(counts.d_hat()[j]);
    p.consumption.push_back(inst.types[j].consumption);
    p.cdfs.push_back(&inst.types[j].reward);
  }
  p.capacities = inst.capacities;
  const auto sol = solve_dual(p);
  for (int t = 0; t < inst.horizon(); ++t) {
    const int j = path.entries[t].type;
    EXPECT_NEAR(traj.thresholds[t], inst.types[j].reward.inverse(1.0 - sol.q[j]), 1e-6);
  }
}

TEST(PartialAdaptive, ResolveEveryHoldsTheQuantiles) {
  const Instance inst = testing::random_instance(41, 2, 1, 60, 0.4);
  const SamplePath path = sample_path(inst, 3);
  const ArrivalCounts counts =
      count_types(sample_history(inst, HistoryMode::kTypeOnly, 4), inst.num_types());
  PolicyConfig config;
  config.resolve_every = 7;
  AdaptiveState state = AdaptiveState::start(inst, config);
  std::vector<double> held;
  for (int t = 0; t < inst.horizon(); ++t) {
    partial_adaptive_step(inst, state, counts, path.entries[t].type, path.entries[t].reward);
    if (t % 7 == 0) {
      held = state.last_q;
    } else {
      ASSERT_EQ(state.last_q, held) << t;
    }
  }
}

TEST(FullyAdaptive, BranchesAreExclusiveAndConsistent) {
  const Instance inst = testing::random_instance(51, 3, 2, 400, 0.35);
  const SamplePath path = sample_path(inst, 6);
  PolicyConfig config;
  config.kappa = 0.1;
  const auto traj = run_policy(inst, path, sample_history(inst, HistoryMode::kTypeOnly, 7),
                               PolicyKind::kFullyAdaptive, config);
  int seen[4] = {0, 0, 0, 0};
  for (int t = 0; t < inst.horizon(); ++t) {
    const int b = traj.branches[t];
    ASSERT_GE(b, 1);
    ASSERT_LE(b, 3);
    ++seen[b];
    const auto& law = inst.types[path.entries[t].type].reward;
    if (b == 1) {
      EXPECT_EQ(traj.thresholds[t], law.lo());
    } else if (b == 2) {
      EXPECT_FALSE(traj.decisions[t]);
    }
  }
  EXPECT_GT(seen[3], 0);
}

TEST(FullyAdaptive, AmpleCapacityAcceptsEverything) {
  const Instance inst = testing::random_instance(61, 3, 2, 200, 2.0);
  const SamplePath path = sample_path(inst, 1);
  const auto traj = run_policy(inst, path, sample_history(inst, HistoryMode::kTypeOnly, 2),
                               PolicyKind::kFullyAdaptive);
  EXPECT_EQ(traj.accepted, inst.horizon());
  for (int b : traj.branches) EXPECT_EQ(b, 1);
}

TEST(FullyAdaptive, WideBandSkipsQuantileBranch) {
  // A huge band at T = 4 pushes every interior q into a rounding branch.
  const Instance inst = single_type(4, 2.0);
  PolicyConfig config;
  config.kappa = 10.0;
  const auto traj = run_policy(inst, sample_path(inst, 5),
                               sample_history(inst, HistoryMode::kTypeOnly, 6),
                               PolicyKind::kFullyAdaptive, config);
  for (int b : traj.branches) EXPECT_NE(b, 3);
}

TEST(Trajectory, CsvHasHeaderAndOneRowPerPeriod) {
  const Instance inst = testing::random_instance(3, 2, 2, 25, 0.5);
  const SamplePath path = sample_path(inst, 3);
  const auto traj = run_policy(inst, path, sample_history(inst, HistoryMode::kTypeOnly, 3),
                               PolicyKind::kPartialAdaptive);
  std::ostringstream out;
  write_trajectory_csv(out, path, traj);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,type,reward,threshold,decision,remaining_1,remaining_2");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 25);
}

}  // namespace
}  // namespace qthresh
