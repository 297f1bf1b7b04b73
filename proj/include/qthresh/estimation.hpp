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

#ifndef QTHRESH_ESTIMATION_HPP_
#define QTHRESH_ESTIMATION_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qthresh/cdf.hpp"
#include "qthresh/errors.hpp"
#include "qthresh/format.hpp"
#include "qthresh/model.hpp"
#include "qthresh/reward_dist.hpp"

namespace qthresh {

// Per-type arrival counts of a one-sample-per-period history.
//
// Periods are 0-based: suffix(t) counts history periods t..T-1, so
// suffix(0) == d_hat() and suffix(T) is all zeros.
class ArrivalCounts {
 public:
  ArrivalCounts(int horizon, int types)
      : horizon_(horizon),
        types_(types),
        suffix_(static_cast<std::size_t>(horizon + 1) * types, 0) {}

  int horizon() const { return horizon_; }
  int num_types() const { return types_; }

  std::span<const int> d_hat() const { return suffix(0); }
  std::span<const int> suffix(int t) const {
    return {suffix_.data() + static_cast<std::size_t>(t) * types_,
            static_cast<std::size_t>(types_)};
  }

 private:
  friend ArrivalCounts count_types(const HistoryStream&, int);

  int horizon_;
  int types_;
  std::vector<int> suffix_;
};

inline ArrivalCounts count_types(const HistoryStream& history, int num_types) {
  if (history.entries.empty()) throw InputError("history is empty");
  const int horizon = history.horizon();
  ArrivalCounts counts(horizon, num_types);
  for (int t = horizon - 1; t >= 0; --t) {
    const int j = history.entries[t].type;
    if (j < 0 || j >= num_types) throw InputError("history type id out of range");
    for (int k = 0; k < num_types; ++k) {
      counts.suffix_[static_cast<std::size_t>(t) * num_types + k] =
          counts.suffix_[static_cast<std::size_t>(t + 1) * num_types + k] + (k == j ? 1 : 0);
    }
  }
  return counts;
}

// Epanechnikov kernel k(u) = 0.75 (1 - u^2) on [-1, 1] and its CDF.
inline double epanechnikov_density(double u) {
  return std::abs(u) >= 1.0 ? 0.0 : 0.75 * (1.0 - u * u);
}
inline double epanechnikov_cdf(double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 + 0.75 * u - 0.25 * u * u * u;
}

// Smoothed empirical CDF  F(x) = (1/N) sum_i K((x - X_i) / h)  with
// Epanechnikov K and bandwidth h = N^(-1/2) unless overridden.
//
// Samples must lie in the clamp interval [a, b] (the type's reward support);
// the estimate is then supported on [a - h, b + h].
class KernelCdfEstimate final : public RewardCdf {
 public:
  static constexpr double kInverseTolerance = 1e-10;

  KernelCdfEstimate(double clamp_lo, double clamp_hi,
                    std::optional<double> bandwidth_override = std::nullopt)
      : clamp_lo_(clamp_lo), clamp_hi_(clamp_hi), bandwidth_override_(bandwidth_override) {
    if (!(clamp_hi > clamp_lo)) throw InputError("kernel clamp interval is empty");
    if (bandwidth_override && !(*bandwidth_override > 0.0)) {
      throw InputError("kernel bandwidth must be positive");
    }
  }

  static KernelCdfEstimate from_samples(double clamp_lo, double clamp_hi,
                                        std::span<const double> samples,
                                        std::optional<double> bandwidth_override = std::nullopt) {
    KernelCdfEstimate est(clamp_lo, clamp_hi, bandwidth_override);
    for (double x : samples) est.update(x);
    return est;
  }

  // Appends one observation; the bandwidth follows the new sample count.
  void update(double x) {
    constexpr double kSlack = 1e-12;
    if (!(x >= clamp_lo_ - kSlack && x <= clamp_hi_ + kSlack)) {
      throw DataError("sample " + format_double(x) + " outside [" + format_double(clamp_lo_) +
                      ", " + format_double(clamp_hi_) + "]");
    }
    samples_.push_back(x);
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), x), x);
  }

  int size() const { return static_cast<int>(samples_.size()); }
  bool empty() const { return samples_.empty(); }
  const std::vector<double>& samples() const { return samples_; }
  double clamp_lo() const { return clamp_lo_; }
  double clamp_hi() const { return clamp_hi_; }

  double bandwidth() const {
    if (bandwidth_override_) return *bandwidth_override_;
    if (samples_.empty()) throw EstimatorEmpty();
    return 1.0 / std::sqrt(static_cast<double>(samples_.size()));
  }

  double cdf(double x) const override {
    if (samples_.empty()) throw EstimatorEmpty();
    const double h = bandwidth();
    // Samples at or below x - h contribute exactly 1, samples at or above
    // x + h contribute 0; only the band in between needs the kernel.
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x - h);
    double sum = static_cast<double>(it - sorted_.begin());
    for (; it != sorted_.end() && *it < x + h; ++it) sum += epanechnikov_cdf((x - *it) / h);
    return std::clamp(sum / static_cast<double>(sorted_.size()), 0.0, 1.0);
  }

  double density(double x) const {
    if (samples_.empty()) throw EstimatorEmpty();
    const double h = bandwidth();
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x - h);
    double sum = 0.0;
    for (; it != sorted_.end() && *it < x + h; ++it) sum += epanechnikov_density((x - *it) / h);
    return sum / (h * static_cast<double>(sorted_.size()));
  }

  // Smallest x in [a - h, b + h] with cdf(x) >= p, by bisection.
  double inverse(double p) const override {
    check_probability(p, "p");
    if (samples_.empty()) throw EstimatorEmpty();
    double lo = support_lo();
    double hi = support_hi();
    if (p <= 0.0) return lo;
    while (hi - lo > kInverseTolerance) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) >= p) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  }

  double support_lo() const override { return clamp_lo_ - bandwidth(); }
  double support_hi() const override { return clamp_hi_ + bandwidth(); }

  // Closed form: with M = inverse(1 - q), the integral equals
  //   E[X; X > M] + M (F(M) - (1 - q))
  // under the kernel mixture; the second term absorbs the bisection residual.
  double quantile_integral(double q) const override {
    check_probability(q, "q");
    if (samples_.empty()) throw EstimatorEmpty();
    if (q == 0.0) return 0.0;
    const double h = bandwidth();
    const double m = inverse(1.0 - q);
    double sum = 0.0;
    for (auto it = std::upper_bound(sorted_.begin(), sorted_.end(), m - h); it != sorted_.end();
         ++it) {
      const double u0 = std::clamp((m - *it) / h, -1.0, 1.0);
      const double tail = 1.0 - u0 * u0;
      sum += *it * (1.0 - epanechnikov_cdf(u0)) + h * 0.1875 * tail * tail;
    }
    const double upper = sum / static_cast<double>(sorted_.size());
    return upper + m * (cdf(m) - (1.0 - q));
  }

 private:
  double clamp_lo_;
  double clamp_hi_;
  std::optional<double> bandwidth_override_;
  std::vector<double> samples_;  // insertion order
  std::vector<double> sorted_;
};

// Exact uniform CDF on the type's support, used before the first observation.
inline RewardDist uniform_prior(double lo, double hi) { return RewardDist::uniform(lo, hi); }

// Reward estimate of one type during an adaptive run: the uniform prior until
// the first observation, the kernel estimate afterwards.
class OnlineRewardEstimate final : public RewardCdf {
 public:
  OnlineRewardEstimate(double lo, double hi,
                       std::optional<double> bandwidth_override = std::nullopt)
      : prior_(uniform_prior(lo, hi)), kernel_(lo, hi, bandwidth_override) {}

  void update(double x) { kernel_.update(x); }

  bool using_prior() const { return kernel_.empty(); }
  const KernelCdfEstimate& kernel() const { return kernel_; }
  const RewardCdf& active() const {
    return kernel_.empty() ? static_cast<const RewardCdf&>(prior_) : kernel_;
  }

  double cdf(double x) const override { return active().cdf(x); }
  double inverse(double p) const override { return active().inverse(p); }
  double support_lo() const override { return active().support_lo(); }
  double support_hi() const override { return active().support_hi(); }
  double quantile_integral(double q) const override { return active().quantile_integral(q); }

 private:
  RewardDist prior_;
  KernelCdfEstimate kernel_;
};

// CSV snapshot of per-type kernel samples: type_id, sample_index, reward.
inline void write_estimator_snapshot(std::ostream& out,
                                     std::span<const KernelCdfEstimate* const> estimates) {
  out << "type_id,sample_index,reward\n";
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    const auto& samples = estimates[j]->samples();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CsvRow(out) << static_cast<int>(j) << static_cast<int>(i) << samples[i];
    }
  }
}

}  // namespace qthresh

#endif  // QTHRESH_ESTIMATION_HPP_
