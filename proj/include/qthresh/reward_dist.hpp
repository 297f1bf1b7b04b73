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

#ifndef QTHRESH_REWARD_DIST_HPP_
#define QTHRESH_REWARD_DIST_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qthresh/cdf.hpp"
#include "qthresh/errors.hpp"
#include "qthresh/random.hpp"

namespace qthresh {

enum class RewardKind { kUniform, kTruncatedTriangular, kTruncatedMixture };

inline const char* to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::kUniform:
      return "uniform";
    case RewardKind::kTruncatedTriangular:
      return "truncated_triangular";
    case RewardKind::kTruncatedMixture:
      return "truncated_mixture";
  }
  return "unknown";
}

// Reward distribution with a piecewise-linear density on a bounded support
// [lo, hi], 0 < lo < hi. Every member of the family has closed-form CDF,
// inverse CDF and quantile integral, which is what the exact benchmarks need.
//
//   uniform               params {lo, hi}
//   truncated_triangular  params {lo, hi, left, mode, right}: the triangular
//                         law on [left, right] conditioned on [lo, hi]
//   truncated_mixture     params {weight, lo1, hi1, lo2, hi2}: a two-component
//                         uniform mixture whose supports overlap or touch
class RewardDist final : public RewardCdf {
 public:
  static RewardDist uniform(double lo, double hi) {
    if (!(lo > 0.0 && hi > lo && std::isfinite(hi))) {
      throw InputError("uniform reward needs 0 < lo < hi < inf");
    }
    RewardDist d(RewardKind::kUniform, {lo, hi});
    d.add_piece(lo, hi, 1.0, 1.0);
    d.finish();
    return d;
  }

  static RewardDist truncated_triangular(double lo, double hi, double left, double mode,
                                         double right) {
    if (!(left <= mode && mode <= right && left < right)) {
      throw InputError("truncated_triangular needs left <= mode <= right, left < right");
    }
    if (!(lo > 0.0 && hi > lo && std::isfinite(hi) && lo >= left && hi <= right)) {
      throw InputError("truncated_triangular needs 0 < lo < hi and [lo, hi] inside [left, right]");
    }
    RewardDist d(RewardKind::kTruncatedTriangular, {lo, hi, left, mode, right});
    auto g = [&](double x) {
      if (x <= mode) return mode > left ? (x - left) / (mode - left) : 1.0;
      return right > mode ? (right - x) / (right - mode) : 1.0;
    };
    if (mode > lo && mode < hi) {
      d.add_piece(lo, mode, g(lo), 1.0);
      d.add_piece(mode, hi, 1.0, g(hi));
    } else {
      d.add_piece(lo, hi, g(lo), g(hi));
    }
    d.finish();
    return d;
  }

  static RewardDist truncated_mixture(double weight, double lo1, double hi1, double lo2,
                                      double hi2) {
    if (!(weight > 0.0 && weight < 1.0)) throw InputError("mixture weight must be in (0, 1)");
    if (!(lo1 > 0.0 && hi1 > lo1 && lo2 > 0.0 && hi2 > lo2 && std::isfinite(hi1) &&
          std::isfinite(hi2))) {
      throw InputError("mixture components need 0 < lo < hi < inf");
    }
    if (std::max(lo1, lo2) > std::min(hi1, hi2)) {
      throw InputError("mixture component supports must overlap or touch");
    }
    RewardDist d(RewardKind::kTruncatedMixture, {weight, lo1, hi1, lo2, hi2});
    std::vector<double> cuts = {lo1, hi1, lo2, hi2};
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      double f = 0.0;
      if (mid > lo1 && mid < hi1) f += weight / (hi1 - lo1);
      if (mid > lo2 && mid < hi2) f += (1.0 - weight) / (hi2 - lo2);
      d.add_piece(cuts[k], cuts[k + 1], f, f);
    }
    d.finish();
    return d;
  }

  RewardKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }

  double lo() const { return pieces_.front().x0; }
  double hi() const { return pieces_.back().x1; }
  double support_lo() const override { return lo(); }
  double support_hi() const override { return hi(); }

  // Density bounds over the support.
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  double density(double x) const {
    if (x < lo() || x > hi()) return 0.0;
    const Piece& p = piece_at(x);
    return p.c0 + p.c1 * (x - p.x0);
  }

  double cdf(double x) const override {
    if (x <= lo()) return 0.0;
    if (x >= hi()) return 1.0;
    const Piece& p = piece_at(x);
    const double d = x - p.x0;
    return std::min(1.0, p.cdf0 + d * (p.c0 + 0.5 * p.c1 * d));
  }

  double inverse(double prob) const override {
    check_probability(prob, "p");
    if (prob <= 0.0) return lo();
    if (prob >= 1.0) return hi();
    std::size_t k = 0;
    while (k + 1 < pieces_.size() && pieces_[k + 1].cdf0 <= prob) ++k;
    const Piece& p = pieces_[k];
    const double r = prob - p.cdf0;
    double d;
    if (p.c1 == 0.0) {
      d = r / p.c0;
    } else {
      const double denom = p.c0 + std::sqrt(std::max(0.0, p.c0 * p.c0 + 2.0 * p.c1 * r));
      d = denom > 0.0 ? 2.0 * r / denom : 0.0;
    }
    return std::clamp(p.x0 + d, p.x0, p.x1);
  }

  double quantile_integral(double q) const override {
    check_probability(q, "q");
    if (q == 0.0) return 0.0;
    if (q == 1.0) return mean_;
    const double m = inverse(1.0 - q);
    std::size_t k = 0;
    while (k + 1 < pieces_.size() && pieces_[k].x1 <= m) ++k;
    double total = pieces_[k].upper_moment(m - pieces_[k].x0);
    for (std::size_t j = k + 1; j < pieces_.size(); ++j) total += pieces_[j].upper_moment(0.0);
    return total;
  }

  double mean() const { return mean_; }

  // Inverse-transform draw in [lo, hi).
  double sample(Rng& rng) const { return inverse(rng.uniform()); }

 private:
  struct Piece {
    double x0, x1;
    double c0, c1;  // density c0 + c1 * (x - x0)
    double cdf0 = 0.0;

    // Integral of x f(x) over [x0 + d, x1].
    double upper_moment(double d) const {
      auto prim = [&](double s) {
        return x0 * c0 * s + 0.5 * (x0 * c1 + c0) * s * s + c1 * s * s * s / 3.0;
      };
      return prim(x1 - x0) - prim(d);
    }
    double mass() const {
      const double len = x1 - x0;
      return len * (c0 + 0.5 * c1 * len);
    }
  };

  RewardDist(RewardKind kind, std::vector<double> params)
      : kind_(kind), params_(std::move(params)) {}

  void add_piece(double x0, double x1, double f0, double f1) {
    pieces_.push_back(Piece{x0, x1, f0, (f1 - f0) / (x1 - x0)});
  }

  void finish() {
    double total = 0.0;
    for (const Piece& p : pieces_) total += p.mass();
    alpha_ = std::numeric_limits<double>::infinity();
    beta_ = 0.0;
    double acc = 0.0;
    mean_ = 0.0;
    for (Piece& p : pieces_) {
      p.c0 /= total;
      p.c1 /= total;
      p.cdf0 = acc;
      acc += p.mass();
      mean_ += p.upper_moment(0.0);
      const double f_left = p.c0;
      const double f_right = p.c0 + p.c1 * (p.x1 - p.x0);
      alpha_ = std::min({alpha_, f_left, f_right});
      beta_ = std::max({beta_, f_left, f_right});
    }
    if (!(alpha_ > 0.0)) {
      throw InputError(std::string(to_string(kind_)) +
                       " reward density must be bounded away from zero on its support");
    }
  }

  const Piece& piece_at(double x) const {
    std::size_t k = 0;
    while (k + 1 < pieces_.size() && pieces_[k].x1 <= x) ++k;
    return pieces_[k];
  }

  RewardKind kind_;
  std::vector<double> params_;
  std::vector<Piece> pieces_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  double mean_ = 0.0;
};

}  // namespace qthresh

#endif  // QTHRESH_REWARD_DIST_HPP_
