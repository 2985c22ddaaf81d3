#pragma once

#include "enlarge/mc.hpp"
#include "enlarge/scenario.hpp"
#include "enlarge/viability.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace enlarge {

struct SuiteResult {
  std::string name;
  std::string engine;  // "exact" or "mc"
  bool asserted = true;
  bool pass = true;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const SuiteResult& r);

struct ExactConfig {
  std::uint64_t seed = 1;
  int scenarios = 100;  // for drift, transform, immersion, dies, 1+fin
  int depth = 4;        // scenario depth is drawn in [2, depth]
  int branching = 3;
  int natural_specs = 1000;
  int recursion_scenarios = 100;
  int transmission_scenarios = 200;
  int honest_scenarios = 100;
  int adapted_per_scenario = 5;
  int stopping_samples = 32;
  double tol = 1e-10;
  double linear_floor = 0.01;  // screen for transmission scenarios
  int archive_limit = 20;
  // Suites asserted for the exit status; empty means all.
  std::vector<std::string> asserted;
  // Run on this scenario only instead of generating batches.
  std::optional<Scenario> scenario;
};

// Generated batch: scenario i uses derive_seed(seed, i). With vary_branching
// the cap is drawn per scenario in [2, branching].
std::vector<Scenario> scenario_batch(std::uint64_t seed, int count, int depth, int branching, int n_defaults,
                                     bool vary_branching = false);

SuiteResult suite_drift(const std::vector<Scenario>& batch);
SuiteResult suite_factor_transform(const std::vector<Scenario>& batch, std::uint64_t seed, int per_scenario);
SuiteResult suite_immersion(const std::vector<Scenario>& batch, double tol = 1e-12);
SuiteResult suite_natural(const std::vector<Scenario>& batch);
SuiteResult suite_dies(const std::vector<Scenario>& batch, double tol);
SuiteResult suite_one_fin(const std::vector<Scenario>& batch, std::uint64_t seed, int random_times);
SuiteResult suite_intercept(const std::vector<Scenario>& batch);
SuiteResult suite_recursion(const std::vector<Scenario>& batch, double tol, int archive_limit);
SuiteResult suite_transmission(const std::vector<Scenario>& batch, double tol, int archive_limit);
SuiteResult suite_honest_time(std::uint64_t seed, int count, int archive_limit);

// Transmission batch: two-default scenarios that also pass the screen
// min(1 - phi dN~) > floor at both levels. Attempts are reported.
struct ScreenedBatch {
  std::vector<Scenario> scenarios;
  int attempts = 0;
};
ScreenedBatch transmission_batch(std::uint64_t seed, int count, int depth, int branching, double floor);

std::vector<SuiteResult> run_exact(const ExactConfig& cfg);

// Main MC run plus the control runs (pure Cox, dt halving, injected jumps).
// With dump_csv set, the first cfg.dump_paths paths are written there.
std::vector<SuiteResult> run_mc(const mc::MCConfig& cfg, const std::string& dump_csv = "");

}  // namespace enlarge
