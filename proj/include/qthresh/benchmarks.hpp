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

#ifndef QTHRESH_BENCHMARKS_HPP_
#define QTHRESH_BENCHMARKS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qthresh/cdf.hpp"
#include "qthresh/errors.hpp"
#include "qthresh/fluid.hpp"
#include "qthresh/model.hpp"
#include "qthresh/policies.hpp"
#include "qthresh/random.hpp"

namespace qthresh {

enum class BenchmarkKind { kOfflineExact, kOfflineLp, kFluid, kSemiFluid };

inline const char* to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::kOfflineExact:
      return "offline_exact";
    case BenchmarkKind::kOfflineLp:
      return "offline_lp";
    case BenchmarkKind::kFluid:
      return "fluid";
    case BenchmarkKind::kSemiFluid:
      return "semi_fluid";
  }
  return "unknown";
}

struct BenchmarkValue {
  BenchmarkKind kind;
  double value = 0.0;
  // For offline_lp: bound on (lp value - exact value).
  std::optional<double> gap_certificate;
};

enum class OfflineMode { kExact, kLp };

// Largest path length the exhaustive offline search accepts.
inline constexpr int kMaxExhaustiveHorizon = 24;

namespace internal {

// True when m == 1 and every type consumes the same positive amount, in
// which case the top-k rewards are optimal.
inline std::optional<double> common_unit_consumption(const Instance& instance) {
  if (instance.num_resources() != 1) return std::nullopt;
  const double a = instance.types.front().consumption[0];
  if (!(a > 0.0)) return std::nullopt;
  for (const auto& type : instance.types) {
    if (type.consumption[0] != a) return std::nullopt;
  }
  return a;
}

inline double top_k_sum(const SamplePath& path, double capacity, double unit) {
  std::vector<double> rewards;
  rewards.reserve(path.entries.size());
  for (const Arrival& a : path.entries) rewards.push_back(a.reward);
  std::sort(rewards.begin(), rewards.end(), std::greater<>());
  double used = 0.0;
  double total = 0.0;
  for (double r : rewards) {
    if (used + unit > capacity) break;
    used += unit;
    total += r;
  }
  return total;
}

// Largest T * floor(C) the capacity dynamic program accepts.
inline constexpr double kMaxKnapsackCells = 2e9;

// Integer consumptions on a single resource: the 0/1 knapsack over floor(C)
// capacity units is solved exactly by dynamic programming.
inline bool integer_knapsack_applicable(const Instance& instance) {
  if (instance.num_resources() != 1) return false;
  for (const auto& type : instance.types) {
    const double a = type.consumption[0];
    if (!(a > 0.0) || a != std::floor(a) || a > 1e9) return false;
  }
  const double cells = static_cast<double>(instance.horizon()) *
                       (std::floor(instance.capacities[0]) + 1.0);
  return instance.capacities[0] < 1e8 && cells <= kMaxKnapsackCells;
}

inline double integer_knapsack(const Instance& instance, const SamplePath& path) {
  const auto cap = static_cast<std::size_t>(std::floor(instance.capacities[0]));
  std::vector<double> best(cap + 1, 0.0);
  for (const Arrival& arr : path.entries) {
    const auto a = static_cast<std::size_t>(instance.types[arr.type].consumption[0]);
    if (a > cap) continue;
    for (std::size_t c = cap; c >= a; --c) {
      best[c] = std::max(best[c], best[c - a] + arr.reward);
      if (c == a) break;
    }
  }
  return best[cap];
}

// Depth-first branch and bound over accept/reject vectors. The bound is the
// tightest single-resource fractional knapsack over the undecided items, so
// pruning never discards an optimal subset.
class SubsetSearch {
 public:
  SubsetSearch(const Instance& instance, const SamplePath& path) : m_(instance.num_resources()) {
    const int n = path.horizon();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return path.entries[a].reward > path.entries[b].reward;
    });
    for (int k : order) {
      rewards_.push_back(path.entries[k].reward);
      cons_.push_back(instance.types[path.entries[k].type].consumption);
    }
    by_ratio_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      auto& ord = by_ratio_[i];
      ord.resize(n);
      std::iota(ord.begin(), ord.end(), 0);
      std::sort(ord.begin(), ord.end(), [&](int a, int b) {
        // reward per unit; free items first
        return rewards_[a] * cons_[b][i] > rewards_[b] * cons_[a][i];
      });
    }
    remaining_ = instance.capacities;
  }

  double run() {
    best_ = 0.0;
    dfs(0, 0.0);
    return best_;
  }

 private:
  double bound(int next) const {
    double best_bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_; ++i) {
      double cap = remaining_[i];
      double b = 0.0;
      for (int k : by_ratio_[i]) {
        if (k < next) continue;
        const double a = cons_[k][i];
        if (a <= cap) {
          cap -= a;
          b += rewards_[k];
        } else {
          b += rewards_[k] * cap / a;
          break;
        }
      }
      best_bound = std::min(best_bound, b);
    }
    return best_bound;
  }

  void dfs(int next, double value) {
    if (value > best_) best_ = value;
    if (next == static_cast<int>(rewards_.size())) return;
    if (value + bound(next) <= best_) return;
    bool fits = true;
    for (int i = 0; i < m_; ++i) fits = fits && cons_[next][i] <= remaining_[i];
    if (fits) {
      for (int i = 0; i < m_; ++i) remaining_[i] -= cons_[next][i];
      dfs(next + 1, value + rewards_[next]);
      for (int i = 0; i < m_; ++i) remaining_[i] += cons_[next][i];
    }
    dfs(next + 1, value);
  }

  int m_;
  std::vector<double> rewards_;
  std::vector<std::vector<double>> cons_;
  std::vector<std::vector<int>> by_ratio_;
  std::vector<double> remaining_;
  double best_ = 0.0;
};

// Fractional knapsack for one resource: greedy by reward per unit.
inline double fractional_knapsack(const Instance& instance, const SamplePath& path) {
  std::vector<std::pair<double, double>> items;  // reward, consumption
  for (const Arrival& a : path.entries) {
    items.emplace_back(a.reward, instance.types[a.type].consumption[0]);
  }
  std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
    return x.first * y.second > y.first * x.second;
  });
  double cap = instance.capacities[0];
  double total = 0.0;
  for (const auto& [r, a] : items) {
    if (a <= cap) {
      cap -= a;
      total += r;
    } else {
      total += r * cap / a;
      break;
    }
  }
  return total;
}

}  // namespace internal

// Hindsight optimum of the realized path.
//
// exact: top-k rewards when m = 1 with a common consumption; a capacity
// dynamic program when m = 1 with integer consumptions; exhaustive branch and
// bound for T <= 24; SizeError otherwise.
// lp: the LP relaxation (an upper bound on exact) -- greedy for m = 1, the
// Lagrangian dual over the path's empirical per-type atoms otherwise. Any
// dual point bounds the LP from above, so a loosely converged dual is still
// a valid bound.
inline BenchmarkValue offline_optimum(const Instance& instance, const SamplePath& path,
                                      OfflineMode mode) {
  if (path.horizon() != instance.horizon()) throw InputError("path length differs from horizon");
  if (mode == OfflineMode::kExact) {
    BenchmarkValue out{BenchmarkKind::kOfflineExact, 0.0, std::nullopt};
    if (const auto unit = internal::common_unit_consumption(instance)) {
      out.value = internal::top_k_sum(path, instance.capacities[0], *unit);
      return out;
    }
    if (internal::integer_knapsack_applicable(instance)) {
      out.value = internal::integer_knapsack(instance, path);
      return out;
    }
    if (path.horizon() > kMaxExhaustiveHorizon) {
      throw SizeError("exact offline optimum limited to T <= " +
                      std::to_string(kMaxExhaustiveHorizon) + " for this instance; use lp mode");
    }
    out.value = internal::SubsetSearch(instance, path).run();
    return out;
  }

  BenchmarkValue out{BenchmarkKind::kOfflineLp, 0.0, std::nullopt};
  double r_max = 0.0;
  for (const auto& type : instance.types) r_max = std::max(r_max, type.reward.hi());
  out.gap_certificate = instance.num_resources() * r_max;
  if (instance.num_resources() == 1) {
    out.value = internal::fractional_knapsack(instance, path);
    return out;
  }
  const int n = instance.num_types();
  std::vector<std::vector<double>> rewards(n);
  for (const Arrival& a : path.entries) rewards[a.type].push_back(a.reward);
  std::vector<AtomicCdf> atoms;
  atoms.reserve(n);
  FluidProblem problem;
  problem.capacities = instance.capacities;
  for (int j = 0; j < n; ++j) {
    problem.weights.push_back(static_cast<double>(rewards[j].size()));
    problem.consumption.push_back(instance.types[j].consumption);
    if (rewards[j].empty()) {
      atoms.push_back(AtomicCdf({instance.types[j].reward.lo()}, {1.0}));
    } else {
      atoms.push_back(AtomicCdf::empirical(rewards[j]));
    }
  }
  for (const auto& a : atoms) problem.cdfs.push_back(&a);
  SolveOptions options;
  options.force_general = true;
  options.max_iterations = 20000;
  const QuantileSolution sol = solve_dual(problem, options);
  out.value = sol.dual_objective;
  return out;
}

// Whether offline_optimum(..., kExact) can handle this instance.
inline bool exact_offline_available(const Instance& instance) {
  return internal::common_unit_consumption(instance).has_value() ||
         internal::integer_knapsack_applicable(instance) ||
         instance.horizon() <= kMaxExhaustiveHorizon;
}

// Fluid relaxation with expected counts and the true laws.
inline BenchmarkValue fluid_value(const Instance& instance) {
  FluidProblem problem;
  problem.weights = expected_counts(instance);
  problem.capacities = instance.capacities;
  for (const auto& type : instance.types) {
    problem.consumption.push_back(type.consumption);
    problem.cdfs.push_back(&type.reward);
  }
  const QuantileSolution sol = solve_dual(problem);
  return {BenchmarkKind::kFluid, sol.objective, std::nullopt};
}

// Semi-fluid relaxation of the path from 1-based period t on: realized
// suffix counts of the path, the given remaining capacities, the true laws.
// t = T + 1 denotes the empty suffix and has value 0.
inline BenchmarkValue semi_fluid_value(const Instance& instance, const SamplePath& path, int t,
                                       std::span<const double> remaining) {
  const int horizon = path.horizon();
  if (t < 1 || t > horizon + 1) throw DomainError("semi-fluid period must lie in [1, T + 1]");
  if (static_cast<int>(remaining.size()) != instance.num_resources()) {
    throw InputError("remaining capacity vector has the wrong length");
  }
  BenchmarkValue out{BenchmarkKind::kSemiFluid, 0.0, std::nullopt};
  if (t == horizon + 1) return out;
  FluidProblem problem;
  problem.weights.assign(instance.num_types(), 0.0);
  for (int s = t - 1; s < horizon; ++s) problem.weights[path.entries[s].type] += 1.0;
  problem.capacities.assign(remaining.begin(), remaining.end());
  for (const auto& type : instance.types) {
    problem.consumption.push_back(type.consumption);
    problem.cdfs.push_back(&type.reward);
  }
  out.value = solve_dual(problem).objective;
  return out;
}

struct RegretReport {
  std::string policy;
  int horizon = 0;
  int replications = 0;
  BenchmarkKind benchmark_kind = BenchmarkKind::kFluid;
  double mean_reward = 0.0;
  double benchmark = 0.0;
  double regret = 0.0;
  double stderr_regret = 0.0;
  double benchmark_stderr = 0.0;
};

// Per-replication outcome, shared by the experiment driver and the harness.
struct ReplicationResult {
  double reward = 0.0;
  int accepted = 0;
  bool feasible = true;
  std::optional<double> offline_exact;
};

// Seeds of replication r under a master seed. Independent of R.
inline std::uint64_t path_seed(std::uint64_t master, std::uint64_t rep) {
  return derive_seed(master, {rep, static_cast<std::uint64_t>(Stream::kPath)});
}
inline std::uint64_t history_seed(std::uint64_t master, std::uint64_t rep) {
  return derive_seed(master, {rep, static_cast<std::uint64_t>(Stream::kHistory)});
}

// One replication: fresh path and history, policy run, hard feasibility audit.
inline ReplicationResult run_replication(const Instance& instance, PolicyKind kind,
                                         const PolicyConfig& config, std::uint64_t master,
                                         std::uint64_t rep, bool with_offline_exact) {
  const SamplePath path = sample_path(instance, path_seed(master, rep));
  const HistoryMode mode =
      kind == PolicyKind::kStatic ? HistoryMode::kRewardObserved : HistoryMode::kTypeOnly;
  const HistoryStream history = sample_history(instance, mode, history_seed(master, rep));
  const PolicyTrajectory traj = run_policy(instance, path, history, kind, config);
  ReplicationResult res;
  res.reward = traj.total_reward;
  res.accepted = traj.accepted;
  res.feasible = check_feasibility(instance, path, traj);
  if (!res.feasible) {
    throw Error(std::string("capacity constraint violated by policy ") + to_string(kind));
  }
  if (with_offline_exact) res.offline_exact = offline_optimum(instance, path, OfflineMode::kExact).value;
  return res;
}

inline double sample_stderr(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

// Regret summary of one policy against one benchmark from per-replication
// results. The fluid benchmark is deterministic; the offline benchmark is
// paired with the policy path by path.
inline RegretReport summarize(std::string policy, int horizon, BenchmarkKind kind,
                              double fluid, std::span<const ReplicationResult> results) {
  RegretReport rep;
  rep.policy = std::move(policy);
  rep.horizon = horizon;
  rep.replications = static_cast<int>(results.size());
  rep.benchmark_kind = kind;
  std::vector<double> rewards, bench, gaps;
  for (const auto& r : results) {
    rewards.push_back(r.reward);
    if (kind == BenchmarkKind::kOfflineExact) {
      bench.push_back(*r.offline_exact);
      gaps.push_back(*r.offline_exact - r.reward);
    }
  }
  const double n = static_cast<double>(results.size());
  rep.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  if (kind == BenchmarkKind::kOfflineExact) {
    rep.benchmark = std::accumulate(bench.begin(), bench.end(), 0.0) / n;
    rep.stderr_regret = sample_stderr(gaps);
    rep.benchmark_stderr = sample_stderr(bench);
  } else {
    rep.benchmark = fluid;
    rep.stderr_regret = sample_stderr(rewards);
  }
  rep.regret = rep.benchmark - rep.mean_reward;
  return rep;
}

// R independent replications of one policy, regret against the fluid value.
inline RegretReport regret_experiment(const Instance& instance, PolicyKind kind,
                                      const PolicyConfig& config, int replications,
                                      std::uint64_t seed) {
  if (replications < 2) throw InputError("regret experiment needs R >= 2");
  const double fluid = fluid_value(instance).value;
  std::vector<ReplicationResult> results;
  results.reserve(replications);
  for (int r = 0; r < replications; ++r) {
    results.push_back(run_replication(instance, kind, config, seed, r, false));
  }
  return summarize(to_string(kind), instance.horizon(), BenchmarkKind::kFluid, fluid, results);
}

}  // namespace qthresh

#endif  // QTHRESH_BENCHMARKS_HPP_
