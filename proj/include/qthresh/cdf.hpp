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

#ifndef QTHRESH_CDF_HPP_
#define QTHRESH_CDF_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qthresh/errors.hpp"

namespace qthresh {

inline void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

// Gauss-Legendre integration with recursive interval halving. Stops on an
// interval when the 10-point rule and its two-halves refinement agree to
// within the interval's share of the absolute tolerance.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-10,
                          int max_depth = 40) {
  static constexpr double kNodes[5] = {0.1488743389816312, 0.4333953941292472,
                                       0.6794095682990244, 0.8650633666889845,
                                       0.9739065285171717};
  static constexpr double kWeights[5] = {0.2955242247147529, 0.2692667193099963,
                                         0.2190863625159820, 0.1494513491505806,
                                         0.0666713443086881};
  auto rule = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double s = 0.0;
    for (int k = 0; k < 5; ++k) {
      s += kWeights[k] * (f(mid - half * kNodes[k]) + f(mid + half * kNodes[k]));
    }
    return s * half;
  };
  if (!(b > a)) return 0.0;
  const double whole = rule(a, b);
  const double abs_tol = rel_tol * std::max(std::abs(whole), 1e-300);
  auto recurse = [&](auto&& self, double lo, double hi, double estimate, double tol,
                     int depth) -> double {
    const double mid = 0.5 * (lo + hi);
    const double left = rule(lo, mid);
    const double right = rule(mid, hi);
    const double refined = left + right;
    if (depth >= max_depth || std::abs(refined - estimate) <= tol) return refined;
    return self(self, lo, mid, left, 0.5 * tol, depth + 1) +
           self(self, mid, hi, right, 0.5 * tol, depth + 1);
  };
  return recurse(recurse, a, b, whole, abs_tol, 0);
}

// Reward CDF as seen by the fluid solver and the threshold rules.
//
// inverse(p) is the generalized inverse: the smallest x with cdf(x) >= p.
// quantile_integral(q) is the expected reward collected when accepting the
// top q-fraction of the distribution, i.e. the integral of inverse(u) over
// [1 - q, 1].
class RewardCdf {
 public:
  virtual ~RewardCdf() = default;

  virtual double cdf(double x) const = 0;
  // Left limit F(x-). Differs from cdf() only at atoms.
  virtual double cdf_left(double x) const { return cdf(x); }
  virtual double inverse(double p) const = 0;
  virtual double support_lo() const = 0;
  virtual double support_hi() const = 0;

  virtual double quantile_integral(double q) const;
};

// Quadrature route for the quantile integral. Generic over any provider.
inline double quantile_integral_by_quadrature(const RewardCdf& dist, double q,
                                              double rel_tol = 1e-10) {
  check_probability(q, "q");
  if (q == 0.0) return 0.0;
  return integrate_adaptive([&](double u) { return dist.inverse(u); }, 1.0 - q, 1.0,
                            rel_tol);
}

inline double RewardCdf::quantile_integral(double q) const {
  return quantile_integral_by_quadrature(*this, q);
}

// Finitely supported distribution. Used for the LP relaxation of a realized
// path (one atom per arrival) and for discretized test instances.
class AtomicCdf final : public RewardCdf {
 public:
  AtomicCdf(std::vector<double> values, std::vector<double> masses) {
    if (values.empty() || values.size() != masses.size()) {
      throw InputError("AtomicCdf needs matching nonempty values and masses");
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (double m : masses) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw InputError("atom masses must be >= 0");
      total += m;
    }
    if (!(total > 0.0)) throw InputError("atom masses sum to zero");
    for (std::size_t k : order) {
      if (!values_.empty() && values_.back() == values[k]) {
        masses_.back() += masses[k] / total;
      } else {
        values_.push_back(values[k]);
        masses_.push_back(masses[k] / total);
      }
    }
    cumulative_.resize(masses_.size());
    std::partial_sum(masses_.begin(), masses_.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
  }

  // Equal-mass atoms, one per observation.
  static AtomicCdf empirical(std::vector<double> values) {
    std::vector<double> masses(values.size(), 1.0);
    return AtomicCdf(std::move(values), std::move(masses));
  }

  double cdf(double x) const override {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    if (it == values_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - values_.begin()) - 1];
  }

  double cdf_left(double x) const override {
    const auto it = std::lower_bound(values_.begin(), values_.end(), x);
    if (it == values_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - values_.begin()) - 1];
  }

  double inverse(double p) const override {
    check_probability(p, "p");
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), p);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                         values_.size() - 1);
    return values_[k];
  }

  double support_lo() const override { return values_.front(); }
  double support_hi() const override { return values_.back(); }

  // Sum of the top q mass, splitting the marginal atom.
  double quantile_integral(double q) const override {
    check_probability(q, "q");
    double remaining = q;
    double total = 0.0;
    for (std::size_t k = values_.size(); k-- > 0 && remaining > 0.0;) {
      const double take = std::min(remaining, masses_[k]);
      total += take * values_[k];
      remaining -= take;
    }
    return total;
  }

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& masses() const { return masses_; }

 private:
  std::vector<double> values_;
  std::vector<double> masses_;
  std::vector<double> cumulative_;
};

}  // namespace qthresh

#endif  // QTHRESH_CDF_HPP_
