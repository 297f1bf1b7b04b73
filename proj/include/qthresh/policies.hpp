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

#ifndef QTHRESH_POLICIES_HPP_
#define QTHRESH_POLICIES_HPP_

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qthresh/errors.hpp"
#include "qthresh/estimation.hpp"
#include "qthresh/fluid.hpp"
#include "qthresh/model.hpp"

namespace qthresh {

enum class PolicyKind {
  kStatic,           // thresholds fixed from a reward-observed history
  kPartialAdaptive,  // kernel estimates updated online, full capacities
  kFullyAdaptive,    // re-solves on remaining capacity with rounding bands
  kClairvoyant,      // static thresholds from the true laws and expected counts
  kFixedRule,        // caller-supplied thresholds
};

inline const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kStatic:
      return "static";
    case PolicyKind::kPartialAdaptive:
      return "partial_adaptive";
    case PolicyKind::kFullyAdaptive:
      return "fully_adaptive";
    case PolicyKind::kClairvoyant:
      return "clairvoyant";
    case PolicyKind::kFixedRule:
      return "fixed_rule";
  }
  return "unknown";
}

inline PolicyKind parse_policy_kind(std::string_view name) {
  for (PolicyKind k : {PolicyKind::kStatic, PolicyKind::kPartialAdaptive,
                       PolicyKind::kFullyAdaptive, PolicyKind::kClairvoyant,
                       PolicyKind::kFixedRule}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

// Per-type acceptance thresholds, with the service probabilities they were
// derived from when there are any.
struct ThresholdRule {
  std::vector<double> thresholds;
  std::vector<double> service_probs;
};

inline ThresholdRule accept_all_rule(const Instance& instance) {
  ThresholdRule rule;
  for (const auto& type : instance.types) rule.thresholds.push_back(type.reward.lo());
  rule.service_probs.assign(instance.num_types(), 1.0);
  return rule;
}

inline ThresholdRule reject_all_rule(const Instance& instance) {
  ThresholdRule rule;
  for (const auto& type : instance.types) rule.thresholds.push_back(type.reward.hi() + 1.0);
  rule.service_probs.assign(instance.num_types(), 0.0);
  return rule;
}

struct PolicyConfig {
  // Rounding-band constant of the fully adaptive policy.
  double kappa = 0.05;
  // Re-solve the fluid problem every k periods (1 = every period).
  int resolve_every = 1;
  // Reward range the learner assumes for every type. Unset: each type's own
  // support [r_lo, r_hi].
  std::optional<std::pair<double, double>> prior_bounds;
  // Adaptive policies use the true reward laws instead of estimates.
  bool true_cdfs = false;
  std::optional<double> bandwidth;
  std::optional<ThresholdRule> fixed_rule;
};

// Decision rule shared by every policy: accept iff the reward clears the
// threshold and every resource still covers the consumption. Returns the
// decision and debits `remaining` on acceptance.
inline bool meta_step(std::span<double> remaining, std::span<const double> consumption,
                      double reward, double threshold) {
  if (!(reward >= threshold)) return false;
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    if (remaining[i] < consumption[i]) return false;
  }
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] -= consumption[i];
  return true;
}

namespace internal {

inline std::pair<double, double> learner_bounds(const Instance& instance, int j,
                                                const PolicyConfig& config) {
  if (config.prior_bounds) return *config.prior_bounds;
  return {instance.types[j].reward.lo(), instance.types[j].reward.hi()};
}

inline FluidProblem make_problem(const Instance& instance, std::vector<double> weights,
                                 std::vector<double> capacities,
                                 std::vector<const RewardCdf*> cdfs) {
  FluidProblem p;
  p.weights = std::move(weights);
  p.capacities = std::move(capacities);
  p.cdfs = std::move(cdfs);
  p.consumption.reserve(instance.num_types());
  for (const auto& type : instance.types) p.consumption.push_back(type.consumption);
  return p;
}

}  // namespace internal

// Static thresholds: kernel estimates from the per-type historical rewards,
// fluid problem weighted by historical counts with the full capacities, and
// M_j = F_j^{-1}(1 - q_j).
inline ThresholdRule build_static(const Instance& instance, const HistoryStream& history,
                                  const PolicyConfig& config = {}) {
  if (history.mode != HistoryMode::kRewardObserved) {
    throw ConfigError("static thresholds need a reward-observed history");
  }
  const int n = instance.num_types();
  const ArrivalCounts counts = count_types(history, n);
  std::vector<KernelCdfEstimate> estimates;
  estimates.reserve(n);
  for (int j = 0; j < n; ++j) {
    const auto [lo, hi] = internal::learner_bounds(instance, j, config);
    estimates.emplace_back(lo, hi, config.bandwidth);
  }
  for (const HistoryEntry& e : history.entries) {
    if (!e.reward) throw InvalidHistory("reward-observed history entry without a reward");
    estimates[e.type].update(*e.reward);
  }
  std::vector<const RewardCdf*> cdfs;
  for (int j = 0; j < n; ++j) {
    if (estimates[j].empty()) {
      throw InvalidHistory("type " + std::to_string(j) + " has no historical sample");
    }
    cdfs.push_back(&estimates[j]);
  }
  const auto d_hat = counts.d_hat();
  const FluidProblem problem = internal::make_problem(
      instance, std::vector<double>(d_hat.begin(), d_hat.end()), instance.capacities, cdfs);
  SolveOptions options;
  options.compute_objective = false;
  const QuantileSolution sol = solve_dual(problem, options);
  ThresholdRule rule;
  rule.service_probs = sol.q;
  for (int j = 0; j < n; ++j) rule.thresholds.push_back(estimates[j].inverse(1.0 - sol.q[j]));
  return rule;
}

// Same construction with the true laws and expected counts.
inline ThresholdRule build_clairvoyant(const Instance& instance) {
  std::vector<const RewardCdf*> cdfs;
  for (const auto& type : instance.types) cdfs.push_back(&type.reward);
  const FluidProblem problem =
      internal::make_problem(instance, expected_counts(instance), instance.capacities, cdfs);
  SolveOptions options;
  options.compute_objective = false;
  const QuantileSolution sol = solve_dual(problem, options);
  ThresholdRule rule;
  rule.service_probs = sol.q;
  for (int j = 0; j < instance.num_types(); ++j) {
    rule.thresholds.push_back(instance.types[j].reward.inverse(1.0 - sol.q[j]));
  }
  return rule;
}

// Width of the fully adaptive rounding band at 1-based period t:
// 2 kappa (ln T / sqrt(T - t + 1) + ln T / sqrt(t)).
inline double rounding_band(int t, int horizon, double kappa) {
  const double log_t = std::log(static_cast<double>(horizon));
  return 2.0 * kappa *
         (log_t / std::sqrt(static_cast<double>(horizon - t + 1)) +
          log_t / std::sqrt(static_cast<double>(t)));
}

// Mutable state of one adaptive run. Owned by a single run.
struct AdaptiveState {
  std::vector<double> remaining;
  std::vector<OnlineRewardEstimate> estimates;
  int t = 0;  // 0-based index of the next period
  std::optional<DualVector> last_dual;
  std::vector<double> last_q;
  PolicyConfig config;

  static AdaptiveState start(const Instance& instance, const PolicyConfig& config) {
    AdaptiveState s;
    s.remaining = instance.capacities;
    s.config = config;
    for (int j = 0; j < instance.num_types(); ++j) {
      const auto [lo, hi] = internal::learner_bounds(instance, j, config);
      s.estimates.emplace_back(lo, hi, config.bandwidth);
    }
    return s;
  }

  const RewardCdf& cdf(const Instance& instance, int j) const {
    if (config.true_cdfs) return instance.types[j].reward;
    return estimates[j];
  }
};

struct StepRecord {
  bool accepted = false;
  double threshold = 0.0;
  double service_prob = 0.0;
  // Fully adaptive branch: 1 accept-all, 2 reject-all, 3 quantile. 0 otherwise.
  int branch = 0;
};

namespace internal {

inline void observe(const Instance& instance, AdaptiveState& state, int j, double r) {
  if (j < 0 || j >= instance.num_types()) throw InputError("arrival type out of range");
  if (!state.config.true_cdfs) state.estimates[j].update(r);
}

inline const std::vector<double>& resolve(const Instance& instance, AdaptiveState& state,
                                          std::vector<double> weights,
                                          std::vector<double> capacities) {
  const int every = std::max(1, state.config.resolve_every);
  if (!state.last_q.empty() && state.t % every != 0) return state.last_q;
  std::vector<const RewardCdf*> cdfs;
  for (int j = 0; j < instance.num_types(); ++j) cdfs.push_back(&state.cdf(instance, j));
  const FluidProblem problem =
      make_problem(instance, std::move(weights), std::move(capacities), std::move(cdfs));
  SolveOptions options;
  options.compute_objective = false;
  options.warm_start = state.last_dual;
  QuantileSolution sol = solve_dual(problem, options);
  state.last_dual = std::move(sol.dual);
  state.last_q = std::move(sol.q);
  return state.last_q;
}

}  // namespace internal

// One period of the partially adaptive policy: update the arriving type's
// estimate with r, re-solve with historical counts and the FULL capacities,
// threshold at the (1 - q)-quantile of the updated estimate, then decide.
inline StepRecord partial_adaptive_step(const Instance& instance, AdaptiveState& state,
                                        const ArrivalCounts& counts, int j, double r) {
  internal::observe(instance, state, j, r);
  const auto d_hat = counts.d_hat();
  const std::vector<double>& q = internal::resolve(
      instance, state, std::vector<double>(d_hat.begin(), d_hat.end()), instance.capacities);
  StepRecord rec;
  rec.service_prob = q[j];
  rec.threshold = state.cdf(instance, j).inverse(1.0 - q[j]);
  rec.accepted = meta_step(state.remaining, instance.types[j].consumption, r, rec.threshold);
  ++state.t;
  return rec;
}

// One period of the fully adaptive policy: update, re-solve with the
// historical suffix counts of periods t..T and the REMAINING capacities, then
// round: near-one q accepts everything, near-zero q rejects everything, the
// rest thresholds at the estimated quantile. First matching branch wins.
inline StepRecord fully_adaptive_step(const Instance& instance, AdaptiveState& state,
                                      const ArrivalCounts& counts, int j, double r) {
  if (!(state.config.kappa > 0.0)) throw ConfigError("kappa must be positive");
  internal::observe(instance, state, j, r);
  const auto suffix = counts.suffix(state.t);
  const std::vector<double>& q = internal::resolve(
      instance, state, std::vector<double>(suffix.begin(), suffix.end()), state.remaining);
  const double band = rounding_band(state.t + 1, instance.horizon(), state.config.kappa);
  StepRecord rec;
  rec.service_prob = q[j];
  if (q[j] >= 1.0 - band) {
    rec.branch = 1;
    rec.threshold = instance.types[j].reward.lo();
  } else if (q[j] <= band) {
    rec.branch = 2;
    rec.threshold = instance.types[j].reward.hi() + 1.0;
  } else {
    rec.branch = 3;
    rec.threshold = state.cdf(instance, j).inverse(1.0 - q[j]);
  }
  rec.accepted = meta_step(state.remaining, instance.types[j].consumption, r, rec.threshold);
  ++state.t;
  return rec;
}

struct PolicyTrajectory {
  std::vector<std::uint8_t> decisions;
  std::vector<double> thresholds;
  std::vector<int> branches;  // fully adaptive only, else zeros
  // Remaining capacities after each period's decision, row-major T x m.
  std::vector<double> remaining;
  int num_resources = 0;
  double total_reward = 0.0;
  int accepted = 0;

  std::span<const double> remaining_after(int t) const {
    return {remaining.data() + static_cast<std::size_t>(t) * num_resources,
            static_cast<std::size_t>(num_resources)};
  }
};

// Exact-as-possible capacity audit: consumption summed in long double and
// compared against the capacity with a relative slack of 1e-12.
inline bool check_feasibility(const Instance& instance, const SamplePath& path,
                              const PolicyTrajectory& traj) {
  for (int i = 0; i < instance.num_resources(); ++i) {
    long double used = 0.0L;
    for (int t = 0; t < path.horizon(); ++t) {
      if (traj.decisions[t]) used += instance.types[path.entries[t].type].consumption[i];
    }
    const long double cap = instance.capacities[i];
    if (used > cap + 1e-12L * std::max<long double>(1.0L, cap)) return false;
  }
  return true;
}

// Runs a policy over one sample path. Deterministic given its inputs.
inline PolicyTrajectory run_policy(const Instance& instance, const SamplePath& path,
                                   const HistoryStream& history, PolicyKind kind,
                                   const PolicyConfig& config = {}) {
  const int horizon = instance.horizon();
  if (path.horizon() != horizon) throw InputError("path length differs from the horizon");
  const bool needs_history = kind == PolicyKind::kStatic ||
                             kind == PolicyKind::kPartialAdaptive ||
                             kind == PolicyKind::kFullyAdaptive;
  if (needs_history && history.horizon() != horizon) {
    throw InputError("history length differs from the horizon");
  }
  if (kind == PolicyKind::kStatic && history.mode != HistoryMode::kRewardObserved) {
    throw ConfigError("static policy requires a reward-observed history");
  }

  const int m = instance.num_resources();
  PolicyTrajectory traj;
  traj.num_resources = m;
  traj.decisions.reserve(horizon);
  traj.thresholds.reserve(horizon);
  traj.branches.reserve(horizon);
  traj.remaining.reserve(static_cast<std::size_t>(horizon) * m);

  auto record = [&](int t, const StepRecord& rec, std::span<const double> remaining) {
    traj.decisions.push_back(rec.accepted ? 1 : 0);
    traj.thresholds.push_back(rec.threshold);
    traj.branches.push_back(rec.branch);
    traj.remaining.insert(traj.remaining.end(), remaining.begin(), remaining.end());
    if (rec.accepted) {
      traj.total_reward += path.entries[t].reward;
      ++traj.accepted;
    }
  };

  if (kind == PolicyKind::kPartialAdaptive || kind == PolicyKind::kFullyAdaptive) {
    const ArrivalCounts counts = count_types(history, instance.num_types());
    AdaptiveState state = AdaptiveState::start(instance, config);
    for (int t = 0; t < horizon; ++t) {
      const Arrival& a = path.entries[t];
      const StepRecord rec = kind == PolicyKind::kPartialAdaptive
                                 ? partial_adaptive_step(instance, state, counts, a.type, a.reward)
                                 : fully_adaptive_step(instance, state, counts, a.type, a.reward);
      record(t, rec, state.remaining);
    }
    return traj;
  }

  ThresholdRule rule;
  switch (kind) {
    case PolicyKind::kStatic:
      rule = build_static(instance, history, config);
      break;
    case PolicyKind::kClairvoyant:
      rule = build_clairvoyant(instance);
      break;
    case PolicyKind::kFixedRule:
      if (!config.fixed_rule) throw ConfigError("fixed_rule policy needs a rule");
      rule = *config.fixed_rule;
      break;
    default:
      break;
  }
  if (static_cast<int>(rule.thresholds.size()) != instance.num_types()) {
    throw ConfigError("threshold rule has the wrong number of types");
  }
  std::vector<double> remaining = instance.capacities;
  for (int t = 0; t < horizon; ++t) {
    const Arrival& a = path.entries[t];
    StepRecord rec;
    rec.threshold = rule.thresholds[a.type];
    if (!rule.service_probs.empty()) rec.service_prob = rule.service_probs[a.type];
    rec.accepted = meta_step(remaining, instance.types[a.type].consumption, a.reward, rec.threshold);
    record(t, rec, remaining);
  }
  return traj;
}

// CSV export: t, type, reward, threshold, decision, remaining_1..m.
inline void write_trajectory_csv(std::ostream& out, const SamplePath& path,
                                 const PolicyTrajectory& traj) {
  out << "t,type,reward,threshold,decision";
  for (int i = 0; i < traj.num_resources; ++i) out << ",remaining_" << (i + 1);
  out << '\n';
  for (int t = 0; t < path.horizon(); ++t) {
    CsvRow row(out);
    row << t << path.entries[t].type << path.entries[t].reward << traj.thresholds[t]
        << static_cast<int>(traj.decisions[t]);
    for (double v : traj.remaining_after(t)) row << v;
  }
}

}  // namespace qthresh

#endif  // QTHRESH_POLICIES_HPP_
