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

// Command-line front end: run, fit and validate scenario files.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "qthresh.hpp"

namespace {

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, int workers) {
  const qthresh::Scenario sc = qthresh::load_scenario(scenario_path);
  const auto result = qthresh::run_scenario(sc, out_dir, seed, workers);
  for (const auto& sub : result.subs) {
    std::cout << "wrote " << out_dir << "/" << sub.name << " (" << sub.rows.size()
              << " replication rows, " << sub.summary.size() << " summary rows)\n";
  }
  return 0;
}

int cmd_fit(const std::string& summary_path) {
  std::ifstream in(summary_path);
  if (!in) throw qthresh::InputError("cannot open " + summary_path);
  const auto rows = qthresh::read_summary_csv(in);
  std::vector<std::string> failures;
  const auto fits = qthresh::fit_scaling(rows, &failures);
  std::cout << "policy,benchmark_kind,points,exponent,intercept,r_squared\n";
  for (const auto& f : fits) {
    qthresh::CsvRow(std::cout) << f.policy << f.benchmark_kind
                               << static_cast<int>(f.horizons.size()) << f.exponent
                               << f.intercept << f.r_squared;
  }
  std::cout << "\npolicy,benchmark_kind,T,residual,regret_over_log_cubed\n";
  for (const auto& f : fits) {
    for (std::size_t k = 0; k < f.horizons.size(); ++k) {
      qthresh::CsvRow(std::cout) << f.policy << f.benchmark_kind << f.horizons[k]
                                 << f.residuals[k] << f.log_cubed_ratio[k];
    }
  }
  for (const auto& f : fits) {
    for (const auto& w : f.warnings) std::cerr << "warning: " << f.policy << ": " << w << "\n";
  }
  for (const auto& w : failures) std::cerr << "warning: no fit for " << w << "\n";
  return fits.empty() ? 1 : 0;
}

int cmd_validate(const std::string& scenario_path) {
  const qthresh::Scenario sc = qthresh::load_scenario(scenario_path);
  const auto report = qthresh::validate_scenario(sc);
  for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "ok: " << sc.name << " (" << sc.subs.size() << " sub-scenario(s), "
            << sc.harness.horizons.size() << " horizon(s), " << sc.harness.policies.size()
            << " policies)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-threshold online allocation experiments"};
  app.require_subcommand(1);

  std::string scenario, out_dir, summary;
  std::optional<std::uint64_t> seed;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto* run = app.add_subcommand("run", "Run a scenario and write CSV results");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Master seed (overrides the scenario's)");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "Fit regret ~ T^b per policy from a summary CSV");
  fit->add_option("--summary", summary, "summary.csv from a run")->required()->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(scenario, out_dir, seed, workers);
    if (*fit) return cmd_fit(summary);
    if (*validate) return cmd_validate(scenario);
  } catch (const qthresh::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
