#pragma once

#include "enlarge/experiment.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace enlarge::lab {

enum ExitCode { kPass = 0, kSuiteFailure = 1, kConfigFailure = 2, kEngineFailure = 3 };

enum class Mode { kExact, kMc, kBoth };

// Parsed run configuration. Exact scenarios come either from generated
// batches or from a single scenario (file or generated, optionally with an
// injected arbitrage).
struct ExperimentConfig {
  Mode mode = Mode::kExact;
  std::uint64_t seed = 0;
  bool has_seed = false;
  double tol = 1e-10;
  ExactConfig exact;
  mc::MCConfig mc;
  bool mc_seed_given = false;
  std::string scenario_file;
  bool single = false;  // generate one scenario instead of batches
  int n_defaults = 1;
  bool inject_arbitrage = false;
};

// Throws Error(kConfigError) on schema violations.
ExperimentConfig parse_experiment(const nlohmann::json& j);

// Raise the asset on every child of the root above its current value.
void inject_arbitrage(Scenario& sc);

nlohmann::json run_report(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, bool dump_paths);

// Table printed by the report subcommand. Throws Error(kMissingReport).
std::string render_report(const std::filesystem::path& dir);

int lab_main(int argc, char** argv);

}  // namespace enlarge::lab
