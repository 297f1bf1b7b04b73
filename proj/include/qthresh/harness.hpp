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

#ifndef QTHRESH_HARNESS_HPP_
#define QTHRESH_HARNESS_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qthresh/benchmarks.hpp"
#include "qthresh/errors.hpp"
#include "qthresh/format.hpp"
#include "qthresh/io.hpp"
#include "qthresh/model.hpp"
#include "qthresh/policies.hpp"
#include "qthresh/random.hpp"

namespace qthresh {

// One policy column of an experiment: a kind plus its configuration.
struct PolicySpec {
  std::string label;
  PolicyKind kind;
  PolicyConfig config;
};

// A concrete instance family: everything but the horizon and capacities.
struct SubScenario {
  std::string name;
  std::vector<QueryType> types;
  Json schedule;
  std::optional<std::vector<double>> capacities;  // fixed, or
  std::optional<std::vector<double>> rho;         // C_i = rho_i * T
  std::vector<std::string> notes;
};

struct HarnessOptions {
  std::vector<int> horizons;
  int replications = 1;
  std::vector<PolicySpec> policies;
  std::vector<BenchmarkKind> benchmarks = {BenchmarkKind::kFluid};
  std::uint64_t seed = 0;
};

struct Scenario {
  std::string name;
  std::vector<SubScenario> subs;
  HarnessOptions harness;
};

// Shift applied to the low-reward type of the first Example 1 configuration
// so that every support stays strictly positive.
inline constexpr double kExample1Shift = 0.01;

namespace internal {

inline std::vector<PolicySpec> expand_policies(const std::vector<std::string>& names,
                                               const std::vector<double>& kappas,
                                               const PolicyConfig& base) {
  std::vector<PolicySpec> out;
  for (const auto& name : names) {
    const PolicyKind kind = parse_policy_kind(name);
    if (kind == PolicyKind::kFixedRule) {
      throw ConfigError("fixed_rule policies cannot be declared in a scenario file");
    }
    if (kind != PolicyKind::kFullyAdaptive) {
      out.push_back({to_string(kind), kind, base});
      continue;
    }
    for (double k : kappas) {
      PolicyConfig c = base;
      c.kappa = k;
      out.push_back({std::string(to_string(kind)) + "(kappa=" + format_double(k) + ")", kind, c});
    }
  }
  return out;
}

inline BenchmarkKind parse_benchmark(const std::string& s) {
  if (s == "fluid") return BenchmarkKind::kFluid;
  if (s == "offline_exact") return BenchmarkKind::kOfflineExact;
  throw ConfigError("unsupported harness benchmark '" + s + "' (use fluid or offline_exact)");
}

inline std::vector<SubScenario> example1_subs() {
  auto u = [](double lo, double hi) { return RewardDist::uniform(lo, hi); };
  const Json schedule = {{"generator", "example1"}};
  SubScenario s1{"scenario1",
                 {{{1.0}, u(1.0, 2.0)}, {{1.0}, u(kExample1Shift, 1.0 + kExample1Shift)}},
                 schedule,
                 std::nullopt,
                 std::vector<double>{0.5},
                 {"second type's U[0,1] reward shifted by +0.01 to U[0.01,1.01] to keep supports "
                  "strictly positive"}};
  SubScenario s2{"scenario2",
                 {{{1.0}, u(1.0, 2.0)}, {{1.0}, u(2.0, 3.0)}},
                 schedule,
                 std::nullopt,
                 std::vector<double>{0.5},
                 {}};
  return {s1, s2};
}

inline std::vector<int> as_horizons(const Json& v) {
  if (!v.is_array() || v.empty()) throw InputError("harness.horizons must be a non-empty array");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<long long>() < 1 || x.get<long long>() > (1LL << 30)) {
      throw InputError("harness.horizons entries must be positive integers");
    }
    out.push_back(x.get<int>());
  }
  return out;
}

}  // namespace internal

inline Scenario scenario_from_json(const Json& doc) {
  using internal::require;
  internal::reject_unknown_keys(doc,
                                {"schema_version", "name", "generator", "horizon", "capacities",
                                 "types", "schedule", "harness"},
                                "scenario");
  check_schema_version(doc);
  Scenario sc;
  const Json& name = require(doc, "name", "scenario");
  if (!name.is_string() || name.get<std::string>().empty()) {
    throw InputError("scenario.name must be a non-empty string");
  }
  sc.name = name.get<std::string>();

  const Json h = doc.value("harness", Json::object());
  internal::reject_unknown_keys(h,
                                {"horizons", "replications", "policies", "kappa_grid",
                                 "capacity_rule", "benchmarks", "prior_bounds", "resolve_every",
                                 "seed"},
                                "harness");
  std::optional<std::vector<double>> rho;
  if (h.contains("capacity_rule")) {
    internal::reject_unknown_keys(h["capacity_rule"], {"rho"}, "harness.capacity_rule");
    rho = internal::as_numbers(require(h["capacity_rule"], "rho", "harness.capacity_rule"),
                               "harness.capacity_rule.rho");
    for (double r : *rho) {
      if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("capacity_rule.rho must be >= 0");
    }
  }

  const bool example1 = doc.contains("generator");
  if (example1) {
    if (!doc["generator"].is_string() || doc["generator"].get<std::string>() != "example1") {
      throw InputError("scenario.generator supports only \"example1\"");
    }
    for (const char* k : {"types", "schedule", "capacities"}) {
      if (doc.contains(k)) throw InputError(std::string("example1 scenarios fix '") + k + "'");
    }
    if (rho) throw InputError("example1 scenarios fix the capacity rule");
    sc.subs = internal::example1_subs();
  } else {
    SubScenario sub;
    sub.name = sc.name;
    sub.types = types_from_json(require(doc, "types", "scenario"));
    sub.schedule = require(doc, "schedule", "scenario");
    if (doc.contains("capacities")) {
      if (rho) throw InputError("give either capacities or harness.capacity_rule, not both");
      sub.capacities = internal::as_numbers(doc["capacities"], "capacities");
    } else if (rho) {
      sub.rho = rho;
    } else {
      throw InputError("scenario needs capacities or harness.capacity_rule");
    }
    sc.subs.push_back(std::move(sub));
  }

  auto& opt = sc.harness;
  if (h.contains("horizons")) {
    opt.horizons = internal::as_horizons(h["horizons"]);
  } else if (doc.contains("horizon")) {
    opt.horizons = internal::as_horizons(Json::array({doc["horizon"]}));
  } else {
    throw InputError("scenario needs horizon or harness.horizons");
  }
  if (h.contains("replications")) {
    const Json& r = h["replications"];
    if (!r.is_number_integer() || r.get<long long>() < 1) {
      throw InputError("harness.replications must be a positive integer");
    }
    opt.replications = r.get<int>();
  }
  PolicyConfig base;
  if (h.contains("prior_bounds")) {
    const auto pb = internal::as_numbers(h["prior_bounds"], "harness.prior_bounds");
    if (pb.size() != 2 || !(pb[0] > 0.0 && pb[1] > pb[0])) {
      throw InputError("harness.prior_bounds must be [lo, hi] with 0 < lo < hi");
    }
    base.prior_bounds = std::make_pair(pb[0], pb[1]);
  }
  if (h.contains("resolve_every")) {
    const Json& k = h["resolve_every"];
    if (!k.is_number_integer() || k.get<long long>() < 1) {
      throw InputError("harness.resolve_every must be a positive integer");
    }
    base.resolve_every = k.get<int>();
  }
  std::vector<std::string> names = {"static", "partial_adaptive", "fully_adaptive"};
  if (h.contains("policies")) {
    names.clear();
    for (const auto& p : h["policies"]) {
      if (!p.is_string()) throw InputError("harness.policies entries must be strings");
      names.push_back(p.get<std::string>());
    }
    if (names.empty()) throw InputError("harness.policies must not be empty");
  }
  std::vector<double> kappas = {base.kappa};
  if (h.contains("kappa_grid")) {
    kappas = internal::as_numbers(h["kappa_grid"], "harness.kappa_grid");
    if (kappas.empty()) throw InputError("harness.kappa_grid must not be empty");
    for (double k : kappas) {
      if (!(k > 0.0)) throw InputError("harness.kappa_grid entries must be positive");
    }
  }
  try {
    opt.policies = internal::expand_policies(names, kappas, base);
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  if (h.contains("benchmarks")) {
    opt.benchmarks.clear();
    for (const auto& b : h["benchmarks"]) {
      if (!b.is_string()) throw InputError("harness.benchmarks entries must be strings");
      opt.benchmarks.push_back(internal::parse_benchmark(b.get<std::string>()));
    }
    if (opt.benchmarks.empty()) throw InputError("harness.benchmarks must not be empty");
  }
  if (h.contains("seed")) {
    if (!h["seed"].is_number_unsigned()) throw InputError("harness.seed must be a u64");
    opt.seed = h["seed"].get<std::uint64_t>();
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  return scenario_from_json(read_json_file(path));
}

// The instance of a sub-scenario at horizon T.
inline Instance build_instance(const SubScenario& sub, int horizon) {
  Instance inst;
  inst.types = sub.types;
  inst.schedule =
      schedule_from_json(sub.schedule, horizon, static_cast<int>(sub.types.size()));
  if (sub.capacities) {
    inst.capacities = *sub.capacities;
  } else {
    for (double r : *sub.rho) inst.capacities.push_back(r * horizon);
  }
  inst.validate();
  return inst;
}

struct ValidationReport {
  std::vector<std::string> warnings;
};

// Builds every (sub-scenario, T) instance and checks the harness can run it.
inline ValidationReport validate_scenario(const Scenario& sc) {
  ValidationReport rep;
  const bool wants_exact =
      std::find(sc.harness.benchmarks.begin(), sc.harness.benchmarks.end(),
                BenchmarkKind::kOfflineExact) != sc.harness.benchmarks.end();
  bool has_static = false;
  for (const auto& p : sc.harness.policies) has_static |= p.kind == PolicyKind::kStatic;
  for (const auto& sub : sc.subs) {
    if (sub.capacities && sc.harness.horizons.size() > 1) {
      rep.warnings.push_back(sub.name + ": fixed capacities do not scale with T");
    }
    for (int T : sc.harness.horizons) {
      const Instance inst = build_instance(sub, T);
      if (wants_exact && !exact_offline_available(inst)) {
        throw ConfigError(sub.name + ": offline_exact is unavailable at T = " + std::to_string(T));
      }
      const auto mu = expected_counts(inst);
      for (int i = 0; i < inst.num_resources(); ++i) {
        double demand = 0.0;
        for (int j = 0; j < inst.num_types(); ++j) demand += mu[j] * inst.types[j].consumption[i];
        if (inst.capacities[i] >= demand) {
          rep.warnings.push_back(sub.name + ": resource " + std::to_string(i) +
                                 " is not binding at T = " + std::to_string(T));
        }
      }
      if (has_static && inst.schedule.gamma() <= 0.0) {
        rep.warnings.push_back(sub.name + ": some type has zero arrival probability at T = " +
                               std::to_string(T) + "; the static policy may lack reward samples");
      }
    }
  }
  return rep;
}

// Per-replication output of one sub-scenario.
struct ReplicationRow {
  int policy = 0;
  int horizon = 0;
  int replication = 0;
  ReplicationResult result;
  double fluid = 0.0;
};

struct SubScenarioResult {
  std::string name;
  std::vector<ReplicationRow> rows;  // ordered by (policy, T, replication)
  std::vector<RegretReport> summary;  // ordered by (policy, T, benchmark)
};

struct RunResult {
  std::vector<SubScenarioResult> subs;
};

// Runs fn(k) for k in [0, count) on `workers` threads; the first exception
// thrown by any task is rethrown after all threads stop.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= count) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error) return;
      }
      try {
        fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// Seed of the (sub-scenario, T) cell; replications then split it by index.
inline std::uint64_t cell_seed(std::uint64_t master, const std::string& sub, int horizon) {
  return derive_seed(master, {hash_name(sub), static_cast<std::uint64_t>(horizon)});
}

inline SubScenarioResult run_sub_scenario(const SubScenario& sub, const HarnessOptions& opt,
                                          std::uint64_t master, int workers) {
  const int P = static_cast<int>(opt.policies.size());
  const int H = static_cast<int>(opt.horizons.size());
  const int R = opt.replications;
  const bool wants_exact = std::find(opt.benchmarks.begin(), opt.benchmarks.end(),
                                     BenchmarkKind::kOfflineExact) != opt.benchmarks.end();
  std::vector<Instance> instances;
  std::vector<double> fluids;
  for (int T : opt.horizons) {
    instances.push_back(build_instance(sub, T));
    fluids.push_back(fluid_value(instances.back()).value);
  }
  SubScenarioResult out;
  out.name = sub.name;
  out.rows.resize(static_cast<std::size_t>(P) * H * R);
  auto index = [&](int p, int h, int r) { return (static_cast<std::size_t>(p) * H + h) * R + r; };

  // Tasks are (T, replication) cells, largest T first for load balance; each
  // runs every policy on the same path and history.
  std::vector<std::pair<int, int>> tasks;
  for (int h = H - 1; h >= 0; --h) {
    for (int r = 0; r < R; ++r) tasks.emplace_back(h, r);
  }
  std::stable_sort(tasks.begin(), tasks.end(), [&](const auto& a, const auto& b) {
    return opt.horizons[a.first] > opt.horizons[b.first];
  });
  parallel_for(static_cast<int>(tasks.size()), workers, [&](int k) {
    const auto [h, r] = tasks[k];
    const Instance& inst = instances[h];
    const std::uint64_t seed = cell_seed(master, sub.name, opt.horizons[h]);
    std::optional<double> exact;
    if (wants_exact) {
      exact = offline_optimum(inst, sample_path(inst, path_seed(seed, r)), OfflineMode::kExact)
                  .value;
    }
    for (int p = 0; p < P; ++p) {
      ReplicationRow& row = out.rows[index(p, h, r)];
      row.policy = p;
      row.horizon = opt.horizons[h];
      row.replication = r;
      row.fluid = fluids[h];
      row.result = run_replication(inst, opt.policies[p].kind, opt.policies[p].config, seed, r,
                                   false);
      row.result.offline_exact = exact;
    }
  });

  for (int p = 0; p < P; ++p) {
    for (int h = 0; h < H; ++h) {
      std::vector<ReplicationResult> cell;
      for (int r = 0; r < R; ++r) cell.push_back(out.rows[index(p, h, r)].result);
      for (BenchmarkKind b : opt.benchmarks) {
        out.summary.push_back(summarize(opt.policies[p].label, opt.horizons[h], b, fluids[h], cell));
      }
    }
  }
  return out;
}

inline void write_replications_csv(std::ostream& out, const SubScenarioResult& res,
                                   const HarnessOptions& opt) {
  const bool exact = std::find(opt.benchmarks.begin(), opt.benchmarks.end(),
                               BenchmarkKind::kOfflineExact) != opt.benchmarks.end();
  {
    CsvRow header(out);
    header << "policy" << "T" << "replication" << "reward" << "accepted" << "fluid";
    if (exact) header << "offline_exact";
    header << "feasible";
  }
  for (const auto& row : res.rows) {
    CsvRow line(out);
    line << opt.policies[row.policy].label << row.horizon << row.replication << row.result.reward
         << row.result.accepted << row.fluid;
    if (exact) line << *row.result.offline_exact;
    line << (row.result.feasible ? 1 : 0);
  }
}

inline void write_summary_csv(std::ostream& out, std::span<const RegretReport> rows) {
  {
    CsvRow header(out);
    header << "policy" << "T" << "R" << "benchmark_kind" << "mean_reward" << "benchmark"
           << "regret" << "stderr";
  }
  for (const auto& r : rows) {
    CsvRow line(out);
    line << r.policy << r.horizon << r.replications << to_string(r.benchmark_kind)
         << r.mean_reward << r.benchmark << r.regret << r.stderr_regret;
  }
}

inline Json run_metadata(const Scenario& sc, const SubScenario& sub, std::uint64_t master) {
  Json policies = Json::array();
  for (const auto& p : sc.harness.policies) {
    Json entry = {{"label", p.label},
                  {"kind", to_string(p.kind)},
                  {"resolve_every", p.config.resolve_every}};
    if (p.kind == PolicyKind::kFullyAdaptive) entry["kappa"] = p.config.kappa;
    if (p.config.prior_bounds) {
      entry["prior_bounds"] = {p.config.prior_bounds->first, p.config.prior_bounds->second};
    }
    policies.push_back(entry);
  }
  Json benchmarks = Json::array();
  for (auto b : sc.harness.benchmarks) benchmarks.push_back(to_string(b));
  return {{"scenario", sc.name},
          {"sub_scenario", sub.name},
          {"master_seed", master},
          {"horizons", sc.harness.horizons},
          {"replications", sc.harness.replications},
          {"policies", policies},
          {"benchmarks", benchmarks},
          {"notes", sub.notes}};
}

// Runs every sub-scenario. With a non-empty out_dir each sub-scenario gets a
// directory <out_dir>/<sub> holding replications.csv, summary.csv and
// metadata.json. seed overrides the scenario's own master seed.
inline RunResult run_scenario(const Scenario& sc, const std::string& out_dir,
                              std::optional<std::uint64_t> seed = std::nullopt, int workers = 1) {
  namespace fs = std::filesystem;
  const std::uint64_t master = seed.value_or(sc.harness.seed);
  validate_scenario(sc);
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw InputError("cannot create output directory " + out_dir);
  }
  RunResult result;
  for (const auto& sub : sc.subs) {
    result.subs.push_back(run_sub_scenario(sub, sc.harness, master, workers));
    if (out_dir.empty()) continue;
    const fs::path dir = fs::path(out_dir) / sub.name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    auto open = [&](const char* file) {
      std::ofstream f(dir / file, std::ios::binary);
      if (!f) throw InputError("cannot write " + (dir / file).string());
      return f;
    };
    {
      auto f = open("replications.csv");
      write_replications_csv(f, result.subs.back(), sc.harness);
    }
    {
      auto f = open("summary.csv");
      write_summary_csv(f, result.subs.back().summary);
    }
    {
      auto f = open("metadata.json");
      f << run_metadata(sc, sub, master).dump(2) << '\n';
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Regret scaling fits.

struct SummaryRow {
  std::string policy;
  int horizon = 0;
  int replications = 0;
  std::string benchmark_kind;
  double mean_reward = 0.0;
  double benchmark = 0.0;
  double regret = 0.0;
  double stderr_regret = 0.0;
};

inline std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("summary CSV is empty");
  if (line != "policy,T,R,benchmark_kind,mean_reward,benchmark,regret,stderr") {
    throw InputError("summary CSV has an unexpected header");
  }
  std::vector<SummaryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw InputError("summary CSV line " + std::to_string(lineno) + " malformed");
    try {
      rows.push_back({f[0], static_cast<int>(parse_double(f[1])),
                      static_cast<int>(parse_double(f[2])), f[3], parse_double(f[4]),
                      parse_double(f[5]), parse_double(f[6]), parse_double(f[7])});
    } catch (const InputError& e) {
      throw InputError("summary CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

struct ScalingFit {
  std::string policy;
  std::string benchmark_kind;
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<int> horizons;       // points used, ascending
  std::vector<double> residuals;   // log regret minus fitted value
  std::vector<int> excluded;       // horizons dropped for nonpositive regret
  // regret / (ln T)^3 per used horizon.
  std::vector<double> log_cubed_ratio;
  std::vector<std::string> warnings;
};

inline constexpr int kMinFitPoints = 4;

// Least squares of log(regret) on log(T). Nonpositive regrets are dropped
// with a warning; fewer than four remaining points is an error.
inline ScalingFit fit_power_law(std::span<const int> horizons, std::span<const double> regrets) {
  if (horizons.size() != regrets.size()) throw InputError("horizon and regret lengths differ");
  std::vector<std::pair<int, double>> pts;
  ScalingFit fit;
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    if (regrets[k] > 0.0 && std::isfinite(regrets[k]) && horizons[k] > 1) {
      pts.emplace_back(horizons[k], regrets[k]);
    } else {
      fit.excluded.push_back(horizons[k]);
      fit.warnings.push_back("excluded T = " + std::to_string(horizons[k]) +
                             " (nonpositive regret " + format_double(regrets[k]) + ")");
    }
  }
  std::sort(pts.begin(), pts.end());
  if (static_cast<int>(pts.size()) < kMinFitPoints) {
    throw InputError("scaling fit needs at least " + std::to_string(kMinFitPoints) +
                     " horizons with positive regret, have " + std::to_string(pts.size()));
  }
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0;
  for (const auto& [T, g] : pts) {
    sx += std::log(static_cast<double>(T));
    sy += std::log(g);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [T, g] : pts) {
    const double dx = std::log(static_cast<double>(T)) - mx, dy = std::log(g) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw InputError("scaling fit needs at least two distinct horizons");
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double sse = 0.0;
  for (const auto& [T, g] : pts) {
    const double lt = std::log(static_cast<double>(T));
    const double res = std::log(g) - (fit.intercept + fit.exponent * lt);
    sse += res * res;
    fit.horizons.push_back(T);
    fit.residuals.push_back(res);
    fit.log_cubed_ratio.push_back(g / (lt * lt * lt));
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

// One fit per (policy, benchmark kind), in order of first appearance.
// Policies whose fit fails are reported through `failures`.
inline std::vector<ScalingFit> fit_scaling(std::span<const SummaryRow> rows,
                                           std::vector<std::string>* failures = nullptr) {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : rows) {
    const std::pair<std::string, std::string> key{r.policy, r.benchmark_kind};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::vector<ScalingFit> fits;
  for (const auto& [policy, bench] : keys) {
    std::vector<int> T;
    std::vector<double> g;
    for (const auto& r : rows) {
      if (r.policy == policy && r.benchmark_kind == bench) {
        T.push_back(r.horizon);
        g.push_back(r.regret);
      }
    }
    try {
      ScalingFit f = fit_power_law(T, g);
      f.policy = policy;
      f.benchmark_kind = bench;
      fits.push_back(std::move(f));
    } catch (const InputError& e) {
      if (failures) failures->push_back(policy + " [" + bench + "]: " + e.what());
    }
  }
  return fits;
}

inline std::vector<SummaryRow> to_summary_rows(std::span<const RegretReport> reports) {
  std::vector<SummaryRow> rows;
  for (const auto& r : reports) {
    rows.push_back({r.policy, r.horizon, r.replications, to_string(r.benchmark_kind),
                    r.mean_reward, r.benchmark, r.regret, r.stderr_regret});
  }
  return rows;
}

}  // namespace qthresh

#endif  // QTHRESH_HARNESS_HPP_
