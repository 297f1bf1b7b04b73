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

#include "qthresh/benchmarks.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qthresh/errors.hpp"
#include "test_support.hpp"

namespace qthresh {
namespace {

using testing::single_type;

// Brute force over all 2^T acceptance vectors.
double brute_force_offline(const Instance& inst, const SamplePath& path) {
  const int horizon = path.horizon();
  const int m = inst.num_resources();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << horizon); ++mask) {
    std::vector<double> used(m, 0.0);
    double value = 0.0;
    for (int t = 0; t < horizon; ++t) {
      if (!(mask >> t & 1u)) continue;
      const Arrival& a = path.entries[t];
      value += a.reward;
      for (int i = 0; i < m; ++i) used[i] += inst.types[a.type].consumption[i];
    }
    bool ok = true;
    for (int i = 0; i < m; ++i) ok = ok && used[i] <= inst.capacities[i] + 1e-9;
    if (ok) best = std::max(best, value);
  }
  return best;
}

SamplePath manual_path(std::initializer_list<Arrival> entries) { return SamplePath{entries}; }

TEST(OfflineExact, SmallHandExamples) {
  const Instance inst = single_type(3, 2.0);
  const SamplePath path = manual_path({{0, 3.0}, {0, 1.0}, {0, 2.0}});
  EXPECT_DOUBLE_EQ(offline_optimum(inst, path, OfflineMode::kExact).value, 5.0);
  EXPECT_DOUBLE_EQ(offline_optimum(single_type(3, 0.0), path, OfflineMode::kExact).value, 0.0);
  EXPECT_DOUBLE_EQ(offline_optimum(single_type(3, 7.0), path, OfflineMode::kExact).value, 6.0);
  // Fractional capacity rounds down to whole acceptances.
  EXPECT_DOUBLE_EQ(offline_optimum(single_type(3, 1.9), path, OfflineMode::kExact).value, 3.0);
  EXPECT_DOUBLE_EQ(offline_optimum(single_type(3, 1.9), path, OfflineMode::kLp).value, 3.0 + 0.9 * 2.0);
  EXPECT_EQ(offline_optimum(inst, path, OfflineMode::kExact).kind, BenchmarkKind::kOfflineExact);
  EXPECT_THROW(offline_optimum(single_type(4, 2.0), path, OfflineMode::kExact), InputError);
}

TEST(OfflineExact, IntegerKnapsackMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Instance inst = testing::random_instance(seed, 3, 1, 14, 0.4);
    ASSERT_TRUE(internal::integer_knapsack_applicable(inst) ||
                internal::common_unit_consumption(inst));
    for (std::uint64_t p = 0; p < 3; ++p) {
      const SamplePath path = sample_path(inst, seed * 10 + p);
      EXPECT_NEAR(offline_optimum(inst, path, OfflineMode::kExact).value,
                  brute_force_offline(inst, path), 1e-9)
          << seed;
    }
  }
}

TEST(OfflineExact, BranchAndBoundMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int m = 1 + static_cast<int>(seed % 3);
    const Instance inst = testing::random_instance(500 + seed, 3, m, 13, 0.35, false);
    const SamplePath path = sample_path(inst, seed);
    EXPECT_NEAR(internal::SubsetSearch(inst, path).run(), brute_force_offline(inst, path), 1e-9)
        << seed;
    EXPECT_NEAR(offline_optimum(inst, path, OfflineMode::kExact).value,
                brute_force_offline(inst, path), 1e-9)
        << seed;
  }
}

TEST(OfflineExact, SizeLimit) {
  const Instance big = testing::random_instance(1, 3, 2, kMaxExhaustiveHorizon + 1, 0.4, false);
  EXPECT_FALSE(exact_offline_available(big));
  EXPECT_THROW(offline_optimum(big, sample_path(big, 1), OfflineMode::kExact), SizeError);
  EXPECT_NO_THROW(offline_optimum(big, sample_path(big, 1), OfflineMode::kLp));
  EXPECT_TRUE(exact_offline_available(
      testing::random_instance(1, 3, 2, kMaxExhaustiveHorizon, 0.4, false)));
  EXPECT_TRUE(exact_offline_available(testing::random_instance(1, 3, 1, 5000, 0.4)));
  EXPECT_TRUE(exact_offline_available(single_type(100000, 5e4)));
}

TEST(OfflineExact, ExampleOneMeans) {
  const int horizon = 2000;
  for (int scenario : {1, 2}) {
    const Instance inst = testing::example1(horizon, scenario);
    std::vector<double> values;
    for (std::uint64_t s = 0; s < 20; ++s) {
      values.push_back(offline_optimum(inst, sample_path(inst, s), OfflineMode::kExact).value /
                       horizon);
    }
    // Scenario 1 keeps the first half (mean 1.5); scenario 2 the second (2.5).
    EXPECT_NEAR(testing::mean(values), scenario == 1 ? 0.75 : 1.25, 0.005) << scenario;
  }
}

TEST(OfflineLp, BoundsExactWithinCertificate) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const int m = 1 + static_cast<int>(seed % 2);
    const Instance inst = testing::random_instance(900 + seed, 3, m, 18, 0.4, false);
    const SamplePath path = sample_path(inst, seed);
    const double exact = offline_optimum(inst, path, OfflineMode::kExact).value;
    const BenchmarkValue lp = offline_optimum(inst, path, OfflineMode::kLp);
    EXPECT_EQ(lp.kind, BenchmarkKind::kOfflineLp);
    ASSERT_TRUE(lp.gap_certificate.has_value());
    EXPECT_GE(lp.value, exact - 1e-9) << seed;
    EXPECT_LE(lp.value - exact, *lp.gap_certificate + 1e-9) << seed;
  }
}

TEST(OfflineLp, TwoResourceMatchesVertexOracle) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const Instance inst = testing::random_instance(1300 + seed, 3, 2, 40, 0.3, false);
    const SamplePath path = sample_path(inst, seed);
    testing::AtomicProblem p;
    p.capacities = inst.capacities;
    for (int j = 0; j < inst.num_types(); ++j) {
      std::vector<double> rewards;
      for (const Arrival& a : path.entries) {
        if (a.type == j) rewards.push_back(a.reward);
      }
      if (rewards.empty()) continue;
      p.weights.push_back(static_cast<double>(rewards.size()));
      p.consumption.push_back(inst.types[j].consumption);
      p.values.push_back(rewards);
      p.masses.push_back(std::vector<double>(rewards.size(), 1.0 / rewards.size()));
    }
    const double oracle = testing::atomic_lp_optimum(p);
    const double lp = offline_optimum(inst, path, OfflineMode::kLp).value;
    EXPECT_GE(lp, oracle - 1e-9);
    EXPECT_NEAR(lp, oracle, 1e-4 * oracle) << seed;
  }
}

TEST(Fluid, UniformHalfCapacity) {
  // 100 arrivals of U[1,2], capacity 50: accept the top half, 100 * 0.875.
  const BenchmarkValue v = fluid_value(single_type(100, 50.0));
  EXPECT_EQ(v.kind, BenchmarkKind::kFluid);
  EXPECT_NEAR(v.value, 87.5, 1e-7);
  EXPECT_NEAR(fluid_value(single_type(100, 200.0)).value, 150.0, 1e-7);
  EXPECT_NEAR(fluid_value(single_type(100, 0.0)).value, 0.0, 1e-12);
}

TEST(SemiFluid, SuffixValues) {
  const Instance inst = single_type(100, 50.0);
  const SamplePath path = sample_path(inst, 3);
  const double half[1] = {25.0};
  EXPECT_NEAR(semi_fluid_value(inst, path, 51, half).value, 43.75, 1e-7);
  const double full[1] = {50.0};
  EXPECT_NEAR(semi_fluid_value(inst, path, 1, full).value, 87.5, 1e-7);
  EXPECT_EQ(semi_fluid_value(inst, path, 101, full).value, 0.0);
  EXPECT_EQ(semi_fluid_value(inst, path, 101, full).kind, BenchmarkKind::kSemiFluid);
  EXPECT_THROW(semi_fluid_value(inst, path, 0, full), DomainError);
  EXPECT_THROW(semi_fluid_value(inst, path, 102, full), DomainError);
  const double two[2] = {1.0, 1.0};
  EXPECT_THROW(semi_fluid_value(inst, path, 1, two), InputError);
}

// Averaging the realized-count relaxation over paths approaches the fluid
// value from below (concavity in the counts).
TEST(SemiFluid, AveragesToFluid) {
  const Instance inst = testing::random_instance(17, 3, 2, 2000, 0.4);
  const double fluid = fluid_value(inst).value;
  std::vector<double> values;
  for (std::uint64_t s = 0; s < 40; ++s) {
    values.push_back(semi_fluid_value(inst, sample_path(inst, s), 1, inst.capacities).value);
  }
  const double avg = testing::mean(values);
  EXPECT_LE(avg, fluid + 3.0 * testing::standard_error(values));
  EXPECT_NEAR(avg / fluid, 1.0, 0.01);
}

TEST(Fluid, UpperBoundsExpectedOffline) {
  const Instance inst = testing::random_instance(23, 3, 1, 1000, 0.3);
  std::vector<double> values;
  for (std::uint64_t s = 0; s < 60; ++s) {
    values.push_back(offline_optimum(inst, sample_path(inst, s), OfflineMode::kExact).value);
  }
  EXPECT_LE(testing::mean(values), fluid_value(inst).value + 3.0 * testing::standard_error(values));
}

TEST(Replication, OfflineDominatesEveryPolicyPathwise) {
  const Instance inst = testing::random_instance(29, 3, 1, 400, 0.35);
  for (PolicyKind kind : {PolicyKind::kStatic, PolicyKind::kPartialAdaptive,
                          PolicyKind::kFullyAdaptive, PolicyKind::kClairvoyant}) {
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      const ReplicationResult r = run_replication(inst, kind, {}, 99, rep, true);
      ASSERT_TRUE(r.offline_exact.has_value());
      EXPECT_TRUE(r.feasible);
      EXPECT_LE(r.reward, *r.offline_exact + 1e-9) << to_string(kind);
    }
  }
}

TEST(Replication, SeedsAreStableAndDistinct) {
  EXPECT_NE(path_seed(5, 0), history_seed(5, 0));
  EXPECT_NE(path_seed(5, 0), path_seed(5, 1));
  EXPECT_EQ(path_seed(5, 3), path_seed(5, 3));
  const Instance inst = testing::random_instance(2, 2, 1, 100, 0.5);
  const auto a = run_replication(inst, PolicyKind::kFullyAdaptive, {}, 7, 4, true);
  const auto b = run_replication(inst, PolicyKind::kFullyAdaptive, {}, 7, 4, true);
  EXPECT_EQ(a.reward, b.reward);
  EXPECT_EQ(a.offline_exact, b.offline_exact);
}

TEST(Summarize, PairedOfflineRegret) {
  const std::vector<ReplicationResult> results = {
      {1.0, 1, true, 2.0}, {2.0, 1, true, 4.0}, {3.0, 1, true, 3.0}};
  const RegretReport r = summarize("p", 10, BenchmarkKind::kOfflineExact, 0.0, results);
  EXPECT_DOUBLE_EQ(r.mean_reward, 2.0);
  EXPECT_DOUBLE_EQ(r.benchmark, 3.0);
  EXPECT_DOUBLE_EQ(r.regret, 1.0);
  EXPECT_NEAR(r.stderr_regret, std::sqrt(1.0 / 3.0), 1e-15);  // gaps 1, 2, 0
  EXPECT_NEAR(r.benchmark_stderr, std::sqrt(1.0 / 3.0), 1e-15);  // 2, 4, 3
  const RegretReport f = summarize("p", 10, BenchmarkKind::kFluid, 5.0, results);
  EXPECT_DOUBLE_EQ(f.regret, 3.0);
  EXPECT_NEAR(f.stderr_regret, std::sqrt(1.0 / 3.0), 1e-15);
  EXPECT_EQ(f.benchmark_stderr, 0.0);
}

TEST(RegretExperiment, RejectAllRegretIsTheFluidValue) {
  const Instance inst = testing::random_instance(37, 2, 1, 200, 0.4);
  PolicyConfig config;
  config.fixed_rule = reject_all_rule(inst);
  const RegretReport r = regret_experiment(inst, PolicyKind::kFixedRule, config, 5, 1);
  EXPECT_EQ(r.mean_reward, 0.0);
  EXPECT_DOUBLE_EQ(r.regret, fluid_value(inst).value);
  EXPECT_EQ(r.stderr_regret, 0.0);
  EXPECT_EQ(r.replications, 5);
  EXPECT_THROW(regret_experiment(inst, PolicyKind::kFixedRule, config, 1, 1), InputError);
}

TEST(RegretExperiment, ClairvoyantBeatsAcceptAll) {
  const Instance inst = testing::random_instance(43, 3, 1, 1000, 0.3);
  PolicyConfig greedy;
  greedy.fixed_rule = accept_all_rule(inst);
  const RegretReport a = regret_experiment(inst, PolicyKind::kFixedRule, greedy, 20, 2);
  const RegretReport c = regret_experiment(inst, PolicyKind::kClairvoyant, {}, 20, 2);
  EXPECT_LT(c.regret, a.regret);
}

TEST(BenchmarkKind, Names) {
  EXPECT_STREQ(to_string(BenchmarkKind::kOfflineExact), "offline_exact");
  EXPECT_STREQ(to_string(BenchmarkKind::kOfflineLp), "offline_lp");
  EXPECT_STREQ(to_string(BenchmarkKind::kFluid), "fluid");
  EXPECT_STREQ(to_string(BenchmarkKind::kSemiFluid), "semi_fluid");
}

}  // namespace
}  // namespace qthresh
