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

#ifndef QTHRESH_FLUID_HPP_
#define QTHRESH_FLUID_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qthresh/cdf.hpp"
#include "qthresh/errors.hpp"

namespace qthresh {

// Quantile-parametrized fluid relaxation
//
//   max_q  sum_j w_j QI_j(q_j)
//   s.t.   sum_j w_j a_{j,i} q_j <= c_i   for every resource i
//          0 <= q_j <= 1
//
// where QI_j(q) is the integral of F_j^{-1} over [1 - q, 1]. The weights are
// expected counts, historical counts or suffix counts depending on the
// caller; the CDFs are true laws, kernel estimates or empirical atoms.
// The CDF pointers are borrowed and must outlive the problem.
struct FluidProblem {
  std::vector<double> weights;
  std::vector<std::vector<double>> consumption;  // n rows of length m
  std::vector<double> capacities;
  std::vector<const RewardCdf*> cdfs;

  int num_types() const { return static_cast<int>(weights.size()); }
  int num_resources() const { return static_cast<int>(capacities.size()); }

  void validate() const {
    const int n = num_types();
    if (n == 0) throw InputError("fluid problem has no types");
    if (static_cast<int>(consumption.size()) != n || static_cast<int>(cdfs.size()) != n) {
      throw InputError("fluid problem: weights, consumption and cdfs disagree on n");
    }
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0) throw InputError("weights must be finite and >= 0");
    }
    for (double c : capacities) {
      if (!std::isfinite(c) || c < 0.0) throw InputError("capacities must be finite and >= 0");
    }
    for (int j = 0; j < n; ++j) {
      if (static_cast<int>(consumption[j].size()) != num_resources()) {
        throw InputError("fluid problem: consumption row has wrong length");
      }
      for (double a : consumption[j]) {
        if (!std::isfinite(a) || a < 0.0) throw InputError("consumption must be finite and >= 0");
      }
      if (cdfs[j] == nullptr) throw InputError("fluid problem: missing CDF");
    }
  }
};

// Resource prices.
struct DualVector {
  std::vector<double> lambda;
};

enum class SolverStatus { kConverged, kIterationLimit };

struct QuantileSolution {
  std::vector<double> q;
  DualVector dual;
  // sum_j w_j QI_j(q_j) at the returned q (NaN when not requested).
  double objective = std::numeric_limits<double>::quiet_NaN();
  // Lagrangian value at dual.lambda (NaN when not requested).
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  // Largest constraint excess of the dual-induced q before the final scaling.
  double violation_before_scaling = 0.0;
  bool scaled = false;
  // Some q_j sat at a jump of its CDF and was split to meet a constraint;
  // other optimal splits exist.
  bool nonunique = false;
  SolverStatus status = SolverStatus::kConverged;
  int iterations = 0;

  bool converged() const { return status == SolverStatus::kConverged; }
};

struct SolveOptions {
  // Relative tolerance on dual-objective improvement (general path).
  double tol = 1e-8;
  int max_iterations = 100000;
  std::optional<DualVector> warm_start;
  // Use the projected-gradient path even for a single resource.
  bool force_general = false;
  // Skip the quantile integrals when only q and lambda are needed.
  bool compute_objective = true;
  // Called once per iteration with (iteration, lambda, dual objective).
  std::function<void(int, std::span<const double>, double)> trace;
};

namespace internal {

inline double price(std::span<const double> lambda, std::span<const double> a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += lambda[i] * a[i];
  return s;
}

inline std::vector<double> usage(const FluidProblem& p, std::span<const double> q) {
  std::vector<double> u(p.num_resources(), 0.0);
  for (int j = 0; j < p.num_types(); ++j) {
    if (p.weights[j] == 0.0 || q[j] == 0.0) continue;
    for (int i = 0; i < p.num_resources(); ++i) u[i] += p.weights[j] * p.consumption[j][i] * q[j];
  }
  return u;
}

inline double capacity_scale(const FluidProblem& p) {
  double s = 1.0;
  for (double c : p.capacities) s = std::max(s, c);
  return s;
}

// Largest price any type can face before all its mass is priced out.
inline double price_ceiling(const FluidProblem& p) {
  double ceiling = 0.0;
  for (int j = 0; j < p.num_types(); ++j) {
    double min_a = std::numeric_limits<double>::infinity();
    for (double a : p.consumption[j]) {
      if (a > 0.0) min_a = std::min(min_a, a);
    }
    if (std::isfinite(min_a)) ceiling = std::max(ceiling, p.cdfs[j]->support_hi() / min_a);
  }
  return std::max(ceiling, 1e-12);
}

}  // namespace internal

// q_j = 1 - F_j(<lambda, a_j>), clamped to [0, 1].
inline std::vector<double> primal_from_dual(const FluidProblem& problem,
                                            std::span<const double> lambda) {
  for (double l : lambda) {
    if (!(l >= 0.0)) throw DomainError("multipliers must be >= 0");
  }
  std::vector<double> q(problem.num_types());
  for (int j = 0; j < problem.num_types(); ++j) {
    const double p = internal::price(lambda, problem.consumption[j]);
    q[j] = std::clamp(1.0 - problem.cdfs[j]->cdf(p), 0.0, 1.0);
  }
  return q;
}

// Lagrangian L(q(lambda), lambda); convex in lambda and an upper bound on the
// fluid optimum for every lambda >= 0.
inline double dual_objective(const FluidProblem& problem, std::span<const double> lambda) {
  const std::vector<double> q = primal_from_dual(problem, lambda);
  const std::vector<double> u = internal::usage(problem, q);
  double value = 0.0;
  for (int j = 0; j < problem.num_types(); ++j) {
    if (problem.weights[j] > 0.0) value += problem.weights[j] * problem.cdfs[j]->quantile_integral(q[j]);
  }
  for (int i = 0; i < problem.num_resources(); ++i) {
    value -= lambda[i] * (u[i] - problem.capacities[i]);
  }
  return value;
}

struct ObjectiveValue {
  double value = 0.0;
  bool feasible = true;
  double max_violation = 0.0;
};

// Primal objective at q. Infeasible q is flagged, never rejected.
inline ObjectiveValue objective_value(const FluidProblem& problem, std::span<const double> q) {
  ObjectiveValue out;
  for (int j = 0; j < problem.num_types(); ++j) {
    check_probability(q[j], "q");
    if (problem.weights[j] > 0.0) out.value += problem.weights[j] * problem.cdfs[j]->quantile_integral(q[j]);
  }
  const std::vector<double> u = internal::usage(problem, q);
  for (int i = 0; i < problem.num_resources(); ++i) {
    out.max_violation = std::max(out.max_violation, u[i] - problem.capacities[i]);
  }
  out.feasible = out.max_violation <= 1e-9;
  out.max_violation = std::max(0.0, out.max_violation);
  return out;
}

namespace internal {

// Single resource: the dual is one-dimensional and usage(lambda) is
// nonincreasing, so the optimal price is the smallest lambda whose usage
// fits. Found by bracketing root search (Illinois steps, bisection fallback),
// then types whose CDF jumps inside the final bracket are filled
// proportionally up to the capacity.
inline QuantileSolution solve_single_resource(const FluidProblem& p, const SolveOptions& opt) {
  const int n = p.num_types();
  const double cap = p.capacities[0];
  std::vector<double> a(n);
  for (int j = 0; j < n; ++j) a[j] = p.consumption[j][0];

  auto q_at = [&](double lambda, bool left_limit, std::vector<double>& q) {
    for (int j = 0; j < n; ++j) {
      const double x = lambda * a[j];
      const double f = left_limit ? p.cdfs[j]->cdf_left(x) : p.cdfs[j]->cdf(x);
      q[j] = std::clamp(1.0 - f, 0.0, 1.0);
    }
  };
  std::vector<double> q(n);
  auto excess = [&](double lambda) {
    q_at(lambda, false, q);
    double u = 0.0;
    for (int j = 0; j < n; ++j) u += p.weights[j] * a[j] * q[j];
    return u - cap;
  };
  auto trace = [&](int it, double lambda) {
    if (!opt.trace) return;
    const double l[1] = {lambda};
    opt.trace(it, l, dual_objective(p, l));
  };

  QuantileSolution sol;
  sol.dual.lambda = {0.0};
  const double ftol = 1e-13 * capacity_scale(p);
  const double ceiling = price_ceiling(p);
  const double xtol = 1e-14 * std::max(1.0, ceiling);
  int iterations = 0;

  double f0 = excess(0.0);
  trace(iterations, 0.0);
  if (f0 <= ftol) {
    sol.q.resize(n);
    q_at(0.0, false, sol.q);
    sol.iterations = 0;
    return sol;
  }

  double lo = 0.0, flo = f0;
  double hi = ceiling, fhi = excess(ceiling);
  if (opt.warm_start && !opt.warm_start->lambda.empty()) {
    const double w = std::clamp(opt.warm_start->lambda[0], 0.0, ceiling);
    double step = std::max(1e-9 * ceiling, 1e-3 * w);
    const double fw = excess(w);
    if (fw > 0.0) {
      lo = w, flo = fw;
      while (lo + step < ceiling) {
        const double x = lo + step;
        const double fx = excess(x);
        ++iterations;
        if (fx <= 0.0) {
          hi = x, fhi = fx;
          break;
        }
        lo = x, flo = fx;
        step *= 4.0;
      }
    } else {
      hi = w, fhi = fw;
      while (hi - step > 0.0) {
        const double x = hi - step;
        const double fx = excess(x);
        ++iterations;
        if (fx > 0.0) {
          lo = x, flo = fx;
          break;
        }
        hi = x, fhi = fx;
        step *= 4.0;
      }
    }
  }

  int side = 0;
  double width_before = hi - lo;
  bool force_bisect = false;
  while (hi - lo > xtol && fhi < -ftol && iterations < opt.max_iterations) {
    ++iterations;
    double x = 0.5 * (lo + hi);
    if (!force_bisect && flo != fhi) {
      const double secant = hi - fhi * (hi - lo) / (fhi - flo);
      if (secant > lo && secant < hi) x = secant;
    }
    const double fx = excess(x);
    trace(iterations, x);
    if (fx > 0.0) {
      lo = x, flo = fx;
      if (side == 1) fhi *= 0.5;
      side = 1;
    } else {
      hi = x, fhi = fx;
      if (side == -1) flo *= 0.5;
      side = -1;
    }
    // Every third step the bracket must have halved, else bisect once.
    force_bisect = false;
    if (iterations % 3 == 0) {
      force_bisect = (hi - lo) > 0.5 * width_before;
      width_before = hi - lo;
    }
  }

  sol.iterations = iterations;
  if (iterations >= opt.max_iterations) sol.status = SolverStatus::kIterationLimit;
  sol.dual.lambda = {hi};
  std::vector<double> q_low(n), q_high(n);
  q_at(hi, false, q_low);
  q_at(lo, true, q_high);
  double used = 0.0, extra = 0.0;
  for (int j = 0; j < n; ++j) {
    used += p.weights[j] * a[j] * q_low[j];
    if (q_high[j] > q_low[j]) extra += p.weights[j] * a[j] * (q_high[j] - q_low[j]);
  }
  const double residual = cap - used;
  sol.q = q_low;
  if (residual > 0.0 && extra > 0.0) {
    const double theta = std::min(1.0, residual / extra);
    for (int j = 0; j < n; ++j) {
      const double gap = q_high[j] - q_low[j];
      if (gap > 0.0) {
        sol.q[j] = std::min(1.0, q_low[j] + theta * gap);
        if (gap > 1e-9 && p.weights[j] > 0.0) sol.nonunique = true;
      }
    }
  }
  return sol;
}

// Scales down every type that uses a violated resource so that all
// constraints hold; returns the largest violation seen beforehand.
inline double restore_feasibility(const FluidProblem& p, std::vector<double>& q, bool& scaled) {
  const std::vector<double> u = usage(p, q);
  double worst = 0.0;
  std::vector<double> ratio(p.num_resources(), 1.0);
  for (int i = 0; i < p.num_resources(); ++i) {
    const double excess = u[i] - p.capacities[i];
    worst = std::max(worst, excess);
    if (excess > 0.0) ratio[i] = u[i] > 0.0 ? p.capacities[i] / u[i] : 0.0;
  }
  scaled = false;
  if (worst <= 0.0) return 0.0;
  for (int j = 0; j < p.num_types(); ++j) {
    double factor = 1.0;
    for (int i = 0; i < p.num_resources(); ++i) {
      if (p.consumption[j][i] > 0.0) factor = std::min(factor, ratio[i]);
    }
    if (factor < 1.0) {
      q[j] *= factor;
      scaled = true;
    }
  }
  return worst;
}

// General resources: projected Newton on the dual while it is smooth, then
// projected gradient descent with Barzilai-Borwein trial steps and Armijo
// backtracking, tracking the best iterate. When backtracking stalls (the
// dual has kinks, e.g. under atomic CDFs) it switches to projected
// subgradient steps with a Polyak-type target level that decays whenever
// progress stops, and finishes with the kink polish below, which stops only
// on a certified duality gap.
inline QuantileSolution solve_general(const FluidProblem& p, const SolveOptions& opt) {
  const int m = p.num_resources();
  const int n = p.num_types();
  const double scale = capacity_scale(p);
  const double ceiling = price_ceiling(p);

  struct Point {
    std::vector<double> lambda, q, grad;
    double value = 0.0;
  };
  auto evaluate = [&](std::vector<double> lambda) {
    Point pt;
    pt.lambda = std::move(lambda);
    pt.q = primal_from_dual(p, pt.lambda);
    const std::vector<double> u = usage(p, pt.q);
    pt.grad.resize(m);
    pt.value = 0.0;
    for (int j = 0; j < n; ++j) {
      if (p.weights[j] > 0.0) pt.value += p.weights[j] * p.cdfs[j]->quantile_integral(pt.q[j]);
    }
    for (int i = 0; i < m; ++i) {
      pt.grad[i] = p.capacities[i] - u[i];
      pt.value += pt.lambda[i] * pt.grad[i];
    }
    return pt;
  };
  // KKT residual: |g_i| where lambda_i > 0, (-g_i)^+ where lambda_i = 0.
  auto stationarity = [&](const Point& pt) {
    double r = 0.0;
    for (int i = 0; i < m; ++i) {
      r = std::max(r, pt.lambda[i] > 0.0 ? std::abs(pt.grad[i]) : std::max(0.0, -pt.grad[i]));
    }
    return r;
  };
  auto project_step = [&](const Point& pt, double step) {
    std::vector<double> next(m);
    for (int i = 0; i < m; ++i) next[i] = std::clamp(pt.lambda[i] - step * pt.grad[i], 0.0, ceiling);
    return next;
  };

  // Dual gradient c - usage(q(lambda)), skipping the quantile integrals.
  auto gradient_at = [&](const std::vector<double>& lambda) {
    const std::vector<double> u = usage(p, primal_from_dual(p, lambda));
    std::vector<double> g(m);
    for (int i = 0; i < m; ++i) g[i] = p.capacities[i] - u[i];
    return g;
  };

  std::vector<double> start(m, 0.0);
  if (opt.warm_start && static_cast<int>(opt.warm_start->lambda.size()) == m) {
    for (int i = 0; i < m; ++i) start[i] = std::clamp(opt.warm_start->lambda[i], 0.0, ceiling);
  }
  Point cur = evaluate(std::move(start));
  Point best = cur;
  const double kkt_tol = 1e-10 * scale;

  QuantileSolution sol;
  int it = 0;
  bool converged = stationarity(cur) <= kkt_tol;
  if (opt.trace) opt.trace(0, cur.lambda, cur.value);

  // Projected Newton step. With continuous laws the dual is C^1 and its
  // Hessian sum_j w_j f_j(<lambda, a_j>) a_j a_j^T is estimated by central
  // differences of the gradient on the free coordinates; near-zero prices
  // whose gradient points outward are pulled to zero instead. Returns nothing
  // when the Hessian is singular there (no density at the current prices,
  // or the kinks of atomic laws) or the line search fails.
  auto try_newton = [&](const Point& at) -> std::optional<Point> {
    double eps = 0.0;
    for (int i = 0; i < m; ++i) {
      eps = std::max(eps, std::abs(at.lambda[i] - std::max(0.0, at.lambda[i] - at.grad[i])));
    }
    eps = std::min(eps, 1e-3 * ceiling);
    std::vector<int> free, held;
    for (int i = 0; i < m; ++i) {
      (at.lambda[i] <= eps && at.grad[i] > 0.0 ? held : free).push_back(i);
    }
    const int k = static_cast<int>(free.size());
    if (k == 0) return std::nullopt;
    std::vector<double> hess(static_cast<std::size_t>(k) * k, 0.0);
    for (int c = 0; c < k; ++c) {
      const int i = free[c];
      const double delta = 1e-6 * std::max(1.0, at.lambda[i]);
      std::vector<double> up = at.lambda, down = at.lambda;
      up[i] += delta;
      down[i] = std::max(0.0, down[i] - delta);
      const std::vector<double> gu = gradient_at(up), gd = gradient_at(down);
      for (int r = 0; r < k; ++r) hess[r * k + c] = (gu[free[r]] - gd[free[r]]) / (up[i] - down[i]);
    }
    double trace_h = 0.0;
    for (int r = 0; r < k; ++r) trace_h += hess[r * k + r];
    if (!(trace_h > 0.0)) return std::nullopt;
    // Cholesky of the symmetrized Hessian.
    std::vector<double> chol(hess.size(), 0.0);
    for (int c = 0; c < k; ++c) {
      for (int r = c; r < k; ++r) {
        double v = 0.5 * (hess[r * k + c] + hess[c * k + r]);
        for (int t = 0; t < c; ++t) v -= chol[r * k + t] * chol[c * k + t];
        if (r == c) {
          if (!(v > 1e-12 * trace_h)) return std::nullopt;
          chol[c * k + c] = std::sqrt(v);
        } else {
          chol[r * k + c] = v / chol[c * k + c];
        }
      }
    }
    std::vector<double> dir(k);
    for (int r = 0; r < k; ++r) {
      double v = -at.grad[free[r]];
      for (int t = 0; t < r; ++t) v -= chol[r * k + t] * dir[t];
      dir[r] = v / chol[r * k + r];
    }
    for (int r = k - 1; r >= 0; --r) {
      double v = dir[r];
      for (int t = r + 1; t < k; ++t) v -= chol[t * k + r] * dir[t];
      dir[r] = v / chol[r * k + r];
    }
    for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
      std::vector<double> next = at.lambda;
      for (int r = 0; r < k; ++r) {
        next[free[r]] = std::clamp(at.lambda[free[r]] + alpha * dir[r], 0.0, ceiling);
      }
      for (int i : held) next[i] = (1.0 - alpha) * at.lambda[i];
      if (next == at.lambda) return std::nullopt;
      Point trial = evaluate(std::move(next));
      double decrease = 0.0;
      for (int i = 0; i < m; ++i) decrease += at.grad[i] * (trial.lambda[i] - at.lambda[i]);
      if (decrease < 0.0 && trial.value <= at.value + 1e-4 * decrease) return trial;
    }
    return std::nullopt;
  };

  // Subgradient steps stall on ridges where each type's price sits on a jump
  // of its CDF: no single subgradient descends there. For a price radius r,
  // every q_j in [1 - F_j(p_j + r), 1 - F_j(p_j - r)] yields a gradient of a
  // nearby point; the least-norm projected combination over that box is a
  // descent direction for steps moving each price by at most r. The box
  // minimizer, scaled to feasibility, is also a primal point whose value
  // certifies the duality gap. The best such point is kept in polish_q.
  std::vector<double> polish_q;
  double polish_value = -std::numeric_limits<double>::infinity();
  auto polish_kinks = [&](Point& at, int& iters) {
    const double gap_tol = opt.tol * std::max(1.0, std::abs(at.value));
    // Required ratio of Frank-Wolfe gap to |d|^2; tightened when a direction
    // fails to descend, since a failure may only mean the box problem was
    // solved too loosely to certify.
    double fw_factor = 0.5;
    double a_max = 0.0;
    for (int j = 0; j < n; ++j) {
      for (double a : p.consumption[j]) a_max = std::max(a_max, a);
    }
    double lip = 0.0;  // Lipschitz constant of the box problem's gradient
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) lip += std::pow(p.weights[j] * p.consumption[j][i], 2);
    }
    lip *= 2.0;
    double radius = 1e-2 * ceiling * std::max(a_max, 1e-12);
    const double radius_floor = 1e-13 * ceiling * std::max(a_max, 1e-12);
    // Below this norm the box already contains a stationary combination.
    const double d_floor = 1e-13 * scale;
    std::vector<double> lo(n), hi(n), q(n), y(n), prev(n), d(m);
    auto projected = [&](const std::vector<double>& qq) {
      const std::vector<double> u = usage(p, qq);
      for (int i = 0; i < m; ++i) {
        const double g = p.capacities[i] - u[i];
        d[i] = at.lambda[i] <= radius / std::max(a_max, 1e-12) ? std::min(g, 0.0) : g;
      }
    };
    while (iters < opt.max_iterations && radius >= radius_floor) {
      ++iters;
      for (int j = 0; j < n; ++j) {
        const double pj = price(at.lambda, p.consumption[j]);
        lo[j] = std::clamp(1.0 - p.cdfs[j]->cdf(pj + radius), 0.0, 1.0);
        hi[j] = std::clamp(1.0 - p.cdfs[j]->cdf(pj - radius), lo[j], 1.0);
        q[j] = std::clamp(at.q[j], lo[j], hi[j]);
      }
      // Accelerated projected gradient on 0.5 * |d(q)|^2 over the box, run
      // until the Frank-Wolfe gap is below fw_factor * |d|^2. Every gradient
      // g' from the box then has <g', d> >= (1 - fw_factor) |d|^2, so -d
      // descends.
      y = q;
      double momentum = 1.0, dd = 0.0;
      for (int k = 0; lip > 0.0; ++k) {
        projected(q);
        dd = 0.0;
        double fw_gap = 0.0;
        for (int i = 0; i < m; ++i) dd += d[i] * d[i];
        for (int j = 0; j < n; ++j) {
          double grad = 0.0;
          for (int i = 0; i < m; ++i) grad -= d[i] * p.weights[j] * p.consumption[j][i];
          fw_gap += grad * (q[j] - (grad > 0.0 ? lo[j] : hi[j]));
        }
        if (fw_gap <= fw_factor * dd || dd <= d_floor * d_floor || k >= 50000) break;
        projected(y);
        prev = q;
        for (int j = 0; j < n; ++j) {
          double grad = 0.0;
          for (int i = 0; i < m; ++i) grad -= d[i] * p.weights[j] * p.consumption[j][i];
          q[j] = std::clamp(y[j] - grad / lip, lo[j], hi[j]);
        }
        const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        for (int j = 0; j < n; ++j) y[j] = q[j] + (momentum - 1.0) / next * (q[j] - prev[j]);
        momentum = next;
      }
      projected(q);

      std::vector<double> candidate = q;
      bool scaled = false;
      restore_feasibility(p, candidate, scaled);
      double lower = 0.0;
      for (int j = 0; j < n; ++j) {
        if (p.weights[j] > 0.0) lower += p.weights[j] * p.cdfs[j]->quantile_integral(candidate[j]);
      }
      if (lower > polish_value) {
        polish_value = lower;
        polish_q = std::move(candidate);
      }
      if (at.value - polish_value <= gap_tol) return true;

      // Largest price move per unit step along -d; steps within the radius
      // are guaranteed to descend, longer ones are tried by doubling.
      double speed = 0.0, d_max = 0.0;
      for (int j = 0; j < n; ++j) speed = std::max(speed, std::abs(price(d, p.consumption[j])));
      for (double v : d) d_max = std::max(d_max, std::abs(v));
      if (!(d_max > d_floor)) {
        radius *= 0.1;
        continue;
      }
      double t = ceiling / d_max;
      if (speed > 0.0) t = std::min(t, radius / speed);
      auto along = [&](double step) {
        std::vector<double> next(m);
        for (int i = 0; i < m; ++i) next[i] = std::clamp(at.lambda[i] - step * d[i], 0.0, ceiling);
        return evaluate(std::move(next));
      };
      Point moved = along(t);
      for (int k = 0; k < 60 && !(moved.value < at.value); ++k) {
        t *= 0.5;
        moved = along(t);
      }
      if (!(moved.value < at.value)) {
        if (fw_factor > 1e-9) {
          fw_factor *= 1e-3;
        } else {
          radius *= 0.1;
        }
        continue;
      }
      fw_factor = 0.5;
      for (int k = 0; k < 60; ++k) {
        Point further = along(2.0 * t);
        if (!(further.value < moved.value)) break;
        moved = std::move(further);
        t *= 2.0;
      }
      at = std::move(moved);
      // Widen the radius to the distance moved so a kink just crossed falls
      // inside the next box.
      radius = std::max(radius, t * speed);
      if (opt.trace) opt.trace(iters, at.lambda, at.value);
    }
    return false;
  };

  double gnorm = 0.0;
  for (double g : cur.grad) gnorm = std::max(gnorm, std::abs(g));
  double step = ceiling / std::max(gnorm, 1e-12);
  int small_improvements = 0;
  bool nonsmooth = false;
  // After a failed Newton attempt, wait `newton_backoff` iterations before
  // the next one; the wait doubles on each failure and resets on success.
  int newton_backoff = 0, newton_wait = 0;

  while (!converged && !nonsmooth && it < opt.max_iterations) {
    ++it;
    if (newton_wait > 0) {
      --newton_wait;
    } else if (std::optional<Point> next = try_newton(cur)) {
      newton_backoff = 0;
      cur = std::move(*next);
      if (cur.value < best.value) best = cur;
      if (opt.trace) opt.trace(it, cur.lambda, cur.value);
      converged = stationarity(cur) <= kkt_tol;
      continue;
    } else {
      newton_backoff = std::min(std::max(1, 2 * newton_backoff), 64);
      newton_wait = newton_backoff;
    }
    // Armijo backtracking along the projection arc.
    Point trial;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = evaluate(project_step(cur, step));
      double decrease = 0.0;
      for (int i = 0; i < m; ++i) decrease += cur.grad[i] * (trial.lambda[i] - cur.lambda[i]);
      if (trial.lambda == cur.lambda) break;
      if (trial.value <= cur.value + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      nonsmooth = stationarity(cur) > kkt_tol;
      converged = !nonsmooth;
      break;
    }
    double ss = 0.0, sy = 0.0;
    for (int i = 0; i < m; ++i) {
      const double s = trial.lambda[i] - cur.lambda[i];
      const double y = trial.grad[i] - cur.grad[i];
      ss += s * s;
      sy += s * y;
    }
    // grad here is c - usage, the gradient of the dual, which is monotone.
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-14 * ceiling, 1e14 * ceiling) : 2.0 * step;
    const double improvement = cur.value - trial.value;
    cur = std::move(trial);
    if (cur.value < best.value) best = cur;
    if (opt.trace) opt.trace(it, cur.lambda, cur.value);
    if (stationarity(cur) <= kkt_tol) {
      converged = true;
    } else if (improvement <= opt.tol * std::max(1.0, std::abs(cur.value))) {
      converged = ++small_improvements >= 3 && stationarity(cur) <= 1e-6 * scale;
      if (small_improvements >= 50) nonsmooth = true;
    } else {
      small_improvements = 0;
    }
  }

  if (nonsmooth) {
    double level = std::max(1e-3 * std::abs(best.value), 1e-6 * scale);
    int stall = 0;
    const int polyak_end = it + std::min(5000, (opt.max_iterations - it) / 2);
    while (it < polyak_end) {
      ++it;
      double g2 = 0.0;
      for (double g : cur.grad) g2 += g * g;
      if (g2 == 0.0) {
        converged = true;
        break;
      }
      const double target = best.value - level;
      const double polyak = (cur.value - target) / g2;
      cur = evaluate(project_step(cur, polyak));
      if (opt.trace) opt.trace(it, cur.lambda, cur.value);
      if (cur.value < best.value - opt.tol * std::max(1.0, std::abs(best.value))) {
        best = cur;
        stall = 0;
      } else if (++stall >= 20) {
        level *= 0.5;
        stall = 0;
        cur = best;
        if (level <= opt.tol * std::max(1.0, std::abs(best.value))) break;
      }
    }
    if (!converged) converged = polish_kinks(best, it);
  }

  sol.iterations = it;
  sol.status = converged ? SolverStatus::kConverged : SolverStatus::kIterationLimit;
  sol.dual.lambda = best.lambda;
  sol.q = best.q;
  if (!polish_q.empty()) {
    std::vector<double> scaled_best = best.q;
    bool scaled = false;
    restore_feasibility(p, scaled_best, scaled);
    double value = 0.0;
    for (int j = 0; j < n; ++j) {
      if (p.weights[j] > 0.0) value += p.weights[j] * p.cdfs[j]->quantile_integral(scaled_best[j]);
    }
    if (polish_value > value) sol.q = polish_q;
  }
  sol.dual_objective = best.value;
  return sol;
}

}  // namespace internal

// Minimizes the Lagrangian dual of the fluid problem over lambda >= 0 and
// returns the dual-induced service probabilities, made feasible.
inline QuantileSolution solve_dual(const FluidProblem& problem, const SolveOptions& options = {}) {
  problem.validate();
  if (!(options.tol > 0.0)) throw InputError("solver tolerance must be positive");
  QuantileSolution sol = problem.num_resources() == 1 && !options.force_general
                             ? internal::solve_single_resource(problem, options)
                             : internal::solve_general(problem, options);
  sol.violation_before_scaling = internal::restore_feasibility(problem, sol.q, sol.scaled);
  if (options.compute_objective) {
    sol.objective = objective_value(problem, sol.q).value;
    sol.dual_objective = dual_objective(problem, sol.dual.lambda);
  }
  return sol;
}

}  // namespace qthresh

#endif  // QTHRESH_FLUID_HPP_
