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

#ifndef QTHRESH_MODEL_HPP_
#define QTHRESH_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qthresh/errors.hpp"
#include "qthresh/random.hpp"
#include "qthresh/reward_dist.hpp"

namespace qthresh {

struct QueryType {
  // Units of each resource consumed on acceptance.
  std::vector<double> consumption;
  RewardDist reward;
};

// Dense T x n matrix of per-period type probabilities. Row t is the arrival
// distribution of period t (0-based).
class ArrivalSchedule {
 public:
  ArrivalSchedule() = default;

  static ArrivalSchedule from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) throw InputError("schedule matrix is empty");
    ArrivalSchedule s(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int t = 0; t < s.horizon_; ++t) {
      if (static_cast<int>(rows[t].size()) != s.types_) {
        throw InputError("schedule row " + std::to_string(t) + " has the wrong length");
      }
      std::copy(rows[t].begin(), rows[t].end(), s.probs_.begin() + s.offset(t));
    }
    s.validate();
    return s;
  }

  static ArrivalSchedule stationary(int horizon, std::span<const double> probs) {
    ArrivalSchedule s(horizon, static_cast<int>(probs.size()));
    for (int t = 0; t < horizon; ++t) s.set_row(t, probs);
    s.validate();
    return s;
  }

  struct Segment {
    double start_fraction;  // segment starts at period floor(start_fraction * T)
    std::vector<double> probs;
  };

  static ArrivalSchedule piecewise(int horizon, const std::vector<Segment>& segments) {
    if (segments.empty()) throw InputError("piecewise schedule needs at least one segment");
    ArrivalSchedule s(horizon, static_cast<int>(segments.front().probs.size()));
    for (int t = 0; t < horizon; ++t) {
      const Segment* active = &segments.front();
      for (const Segment& seg : segments) {
        if (static_cast<int>(std::floor(seg.start_fraction * horizon)) <= t) active = &seg;
      }
      if (static_cast<int>(active->probs.size()) != s.types_) {
        throw InputError("piecewise segments disagree on the number of types");
      }
      s.set_row(t, active->probs);
    }
    s.validate();
    return s;
  }

  // Row t proportional to base_j + amplitude_j * sin(2 pi cycles (t + 1/2) / T + phase_j).
  static ArrivalSchedule sinusoidal(int horizon, std::span<const double> base,
                                    std::span<const double> amplitude, double cycles,
                                    std::span<const double> phase) {
    const int n = static_cast<int>(base.size());
    if (static_cast<int>(amplitude.size()) != n || static_cast<int>(phase.size()) != n) {
      throw InputError("sinusoidal schedule: base, amplitude and phase lengths differ");
    }
    ArrivalSchedule s(horizon, n);
    std::vector<double> row(n);
    for (int t = 0; t < horizon; ++t) {
      const double angle = 2.0 * std::numbers::pi * cycles * (t + 0.5) / horizon;
      for (int j = 0; j < n; ++j) row[j] = base[j] + amplitude[j] * std::sin(angle + phase[j]);
      s.set_row(t, row);
    }
    s.validate();
    return s;
  }

  // Two types; type 0 surely in the first half, type 1 surely in the second.
  static ArrivalSchedule example1(int horizon) {
    ArrivalSchedule s(horizon, 2);
    const double first[2] = {1.0, 0.0};
    const double second[2] = {0.0, 1.0};
    for (int t = 0; t < horizon; ++t) s.set_row(t, t < horizon / 2 ? first : second);
    return s;
  }

  // Independent random rows, each entry at least gamma.
  static ArrivalSchedule random_map(int horizon, int types, double gamma, std::uint64_t seed) {
    if (!(gamma >= 0.0 && gamma * types <= 1.0)) {
      throw InputError("random_map needs 0 <= gamma <= 1/n");
    }
    ArrivalSchedule s(horizon, types);
    Rng rng(seed);
    std::vector<double> row(types);
    for (int t = 0; t < horizon; ++t) {
      double total = 0.0;
      for (double& v : row) total += (v = rng.exponential());
      for (double& v : row) v = gamma + (1.0 - gamma * types) * v / total;
      s.set_row(t, row);
    }
    s.validate();
    return s;
  }

  int horizon() const { return horizon_; }
  int num_types() const { return types_; }

  double prob(int t, int j) const { return probs_[offset(t) + j]; }
  std::span<const double> row(int t) const {
    return {probs_.data() + offset(t), static_cast<std::size_t>(types_)};
  }

  // Minimum arrival probability over all periods and types.
  double gamma() const {
    double g = 1.0;
    for (double p : probs_) g = std::min(g, p);
    return g;
  }

 private:
  ArrivalSchedule(int horizon, int types) : horizon_(horizon), types_(types) {
    if (horizon <= 0 || types <= 0) throw InputError("schedule needs T >= 1 and n >= 1");
    probs_.assign(static_cast<std::size_t>(horizon) * types, 0.0);
  }

  std::size_t offset(int t) const { return static_cast<std::size_t>(t) * types_; }

  // Copies a row, normalizing it to sum to one.
  void set_row(int t, std::span<const double> row) {
    if (static_cast<int>(row.size()) != types_) throw InputError("schedule row has wrong length");
    double total = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InputError("schedule entries must be finite and nonnegative");
      }
      total += v;
    }
    if (!(total > 0.0)) throw InputError("schedule row sums to zero");
    for (int j = 0; j < types_; ++j) probs_[offset(t) + j] = row[j] / total;
  }

  void validate() const {
    for (int t = 0; t < horizon_; ++t) {
      double total = 0.0;
      for (double v : row(t)) {
        if (!(v >= 0.0)) throw InputError("schedule entries must be nonnegative");
        total += v;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw InputError("schedule row " + std::to_string(t) + " does not sum to 1");
      }
    }
  }

  int horizon_ = 0;
  int types_ = 0;
  std::vector<double> probs_;
};

struct Instance {
  std::vector<QueryType> types;
  ArrivalSchedule schedule;
  std::vector<double> capacities;

  int num_types() const { return static_cast<int>(types.size()); }
  int num_resources() const { return static_cast<int>(capacities.size()); }
  int horizon() const { return schedule.horizon(); }

  void validate() const {
    if (types.empty()) throw InputError("instance has no query types");
    if (capacities.empty()) throw InputError("instance has no resources");
    if (schedule.num_types() != num_types()) {
      throw InputError("schedule column count differs from the number of types");
    }
    for (double c : capacities) {
      if (!std::isfinite(c) || c < 0.0) throw InputError("capacities must be finite and >= 0");
    }
    for (std::size_t j = 0; j < types.size(); ++j) {
      const auto& a = types[j].consumption;
      if (static_cast<int>(a.size()) != num_resources()) {
        throw InputError("type " + std::to_string(j) + " consumption has wrong length");
      }
      bool any_positive = false;
      for (double v : a) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw InputError("consumption entries must be finite and >= 0");
        }
        any_positive = any_positive || v > 0.0;
      }
      if (!any_positive) {
        throw InputError("type " + std::to_string(j) + " consumes no resource");
      }
    }
  }
};

// mu_j: expected number of type-j arrivals, the column sums of the schedule.
inline std::vector<double> expected_counts(const Instance& instance) {
  std::vector<double> mu(instance.num_types(), 0.0);
  for (int t = 0; t < instance.horizon(); ++t) {
    const auto row = instance.schedule.row(t);
    for (int j = 0; j < instance.num_types(); ++j) mu[j] += row[j];
  }
  return mu;
}

struct Arrival {
  int type;
  double reward;
};

struct SamplePath {
  std::vector<Arrival> entries;

  int horizon() const { return static_cast<int>(entries.size()); }
};

enum class HistoryMode { kTypeOnly, kRewardObserved };

struct HistoryEntry {
  int type;
  std::optional<double> reward;
};

struct HistoryStream {
  HistoryMode mode = HistoryMode::kTypeOnly;
  std::vector<HistoryEntry> entries;

  int horizon() const { return static_cast<int>(entries.size()); }
};

namespace internal {

// Types and rewards come from separate sub-streams so the type sequence of a
// seed does not depend on whether rewards are drawn.
inline std::vector<Arrival> draw_arrivals(const Instance& instance, std::uint64_t seed,
                                          bool with_rewards) {
  Rng type_rng(derive_seed(seed, {1}));
  Rng reward_rng(derive_seed(seed, {2}));
  std::vector<Arrival> out;
  out.reserve(instance.horizon());
  for (int t = 0; t < instance.horizon(); ++t) {
    const int j = type_rng.categorical(instance.schedule.row(t));
    const double r = with_rewards ? instance.types[j].reward.sample(reward_rng) : 0.0;
    out.push_back({j, r});
  }
  return out;
}

}  // namespace internal

// Paths and histories draw from distinct streams, so they are independent
// even when given the same seed.
inline SamplePath sample_path(const Instance& instance, std::uint64_t seed) {
  const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(Stream::kPath)});
  return SamplePath{internal::draw_arrivals(instance, s, true)};
}

inline HistoryStream sample_history(const Instance& instance, HistoryMode mode,
                                    std::uint64_t seed) {
  const bool rewards = mode == HistoryMode::kRewardObserved;
  HistoryStream h;
  h.mode = mode;
  const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(Stream::kHistory)});
  for (const Arrival& a : internal::draw_arrivals(instance, s, rewards)) {
    h.entries.push_back({a.type, rewards ? std::optional<double>(a.reward) : std::nullopt});
  }
  return h;
}

}  // namespace qthresh

#endif  // QTHRESH_MODEL_HPP_
