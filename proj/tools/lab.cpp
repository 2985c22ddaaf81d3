#include "lab.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace enlarge::lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kMaxDepth = 8;
constexpr int kMaxBranching = 4;

Error config_error(const std::string& what) { return Error(ErrorCode::kConfigError, what); }

void check_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw config_error("unknown key in " + where + ": " + it.key());
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw config_error(path.string() + ": " + e.what());
  }
}

// Write to a sibling temporary and rename into place.
void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw config_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string mode_name(Mode m) { return m == Mode::kExact ? "exact" : m == Mode::kMc ? "mc" : "both"; }

Mode parse_mode(const std::string& s) {
  if (s == "exact") return Mode::kExact;
  if (s == "mc") return Mode::kMc;
  if (s == "both") return Mode::kBoth;
  throw config_error("mode must be exact, mc or both");
}

std::string summary_csv(const std::vector<SuiteResult>& suites) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "engine,suite,asserted,pass,cases,failures,worst\n";
  for (const auto& r : suites)
    os << r.engine << ',' << r.name << ',' << r.asserted << ',' << r.pass << ',' << r.cases << ',' << r.failures
       << ',' << r.worst << '\n';
  return os.str();
}

std::string bins_csv(const std::vector<SuiteResult>& suites) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "process,bucket,status,paths,mean,se,z\n";
  for (const auto& r : suites) {
    if (r.name != "mc_deflator") continue;
    for (const char* process : {"deflated_asset", "deflator"})
      for (const auto& b : r.details.at(std::string(process) + "_bins"))
        os << process << ',' << b.at("bucket").get<int>() << ',' << b.at("label").get<std::string>() << ','
           << b.at("paths").get<long>() << ',' << b.at("mean").get<double>() << ',' << b.at("se").get<double>()
           << ',' << b.at("z").get<double>() << '\n';
  }
  return os.str();
}

Scenario single_scenario(const ExperimentConfig& cfg) {
  Scenario sc;
  if (!cfg.scenario_file.empty()) {
    sc = scenario_from_json(read_json_file(cfg.scenario_file));
  } else {
    GeneratorConfig g;
    g.depth = cfg.exact.depth;
    g.branching = cfg.exact.branching;
    g.n_defaults = cfg.n_defaults;
    g.seed = cfg.seed;
    sc = generate_scenario(g);
  }
  if (cfg.inject_arbitrage) inject_arbitrage(sc);
  return sc;
}

void apply_threads() {
  if (const char* env = std::getenv("ENLARGE_LAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw config_error("ENLARGE_LAB_THREADS must be a positive integer");
    omp_set_num_threads(static_cast<int>(n));
  }
}

int report_error(const std::exception& e, int code) {
  std::cerr << "enlarge_lab: " << e.what() << '\n';
  return code;
}

}  // namespace

ExperimentConfig parse_experiment(const json& j) {
  ExperimentConfig cfg;
  try {
    check_keys(j, {"mode", "seed", "tol", "exact", "mc"}, "config");
    if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("seed")) {
      cfg.seed = j.at("seed").get<std::uint64_t>();
      cfg.has_seed = true;
    }
    read(j, "tol", cfg.tol);
    if (!(cfg.tol > 0.0)) throw config_error("tol must be positive");
    const json ex = j.value("exact", json::object());
    check_keys(ex,
               {"scenarios", "depth", "branching", "natural_specs", "recursion_scenarios", "transmission_scenarios",
                "honest_scenarios", "adapted_per_scenario", "stopping_samples", "linear_floor", "archive_limit",
                "asserted", "scenario_file", "single", "n_defaults", "inject_arbitrage"},
               "exact");
    auto& e = cfg.exact;
    read(ex, "scenarios", e.scenarios);
    read(ex, "depth", e.depth);
    read(ex, "branching", e.branching);
    read(ex, "natural_specs", e.natural_specs);
    read(ex, "recursion_scenarios", e.recursion_scenarios);
    read(ex, "transmission_scenarios", e.transmission_scenarios);
    read(ex, "honest_scenarios", e.honest_scenarios);
    read(ex, "adapted_per_scenario", e.adapted_per_scenario);
    read(ex, "stopping_samples", e.stopping_samples);
    read(ex, "linear_floor", e.linear_floor);
    read(ex, "archive_limit", e.archive_limit);
    read(ex, "asserted", e.asserted);
    read(ex, "scenario_file", cfg.scenario_file);
    read(ex, "single", cfg.single);
    read(ex, "n_defaults", cfg.n_defaults);
    read(ex, "inject_arbitrage", cfg.inject_arbitrage);
    if (e.depth < 2 || e.depth > kMaxDepth) throw config_error("exact depth must be in [2, 8]");
    if (e.branching < 2 || e.branching > kMaxBranching) throw config_error("exact branching must be in [2, 4]");
    if (cfg.n_defaults < 1 || cfg.n_defaults > 3) throw config_error("n_defaults must be in [1, 3]");
    for (int v : {e.scenarios, e.natural_specs, e.recursion_scenarios, e.transmission_scenarios, e.honest_scenarios,
                  e.adapted_per_scenario, e.stopping_samples, e.archive_limit})
      if (v < 0) throw config_error("counts must be nonnegative");
    const json m = j.value("mc", json::object());
    cfg.mc_seed_given = m.is_object() && m.contains("seed");
    cfg.mc = mc::config_from_json(m);
  } catch (const json::exception& e) {
    throw config_error(e.what());
  }
  return cfg;
}

void inject_arbitrage(Scenario& sc) {
  const auto& sp = sc.space;
  const Rational s0 = sc.s.at(0, 0);
  for (int c = 0; c < sp->num_cells(1); ++c) sc.s.at(1, c) = s0 * (Rational(1) + Rational(c + 1, 10));
}

json run_report(const ExperimentConfig& cfg_in, const fs::path& out_dir, bool dump_paths) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.mode != Mode::kMc) {
    const bool generated = cfg.scenario_file.empty();
    if (generated && !cfg.has_seed) throw config_error("seed is required for generated scenarios");
    cfg.exact.seed = cfg.seed;
    cfg.exact.tol = cfg.tol;
    if (!cfg.scenario_file.empty() || cfg.single || cfg.inject_arbitrage) cfg.exact.scenario = single_scenario(cfg);
  }
  if (cfg.mode != Mode::kExact && !cfg.mc_seed_given) {
    if (!cfg.has_seed) throw config_error("seed is required for the mc engine");
    cfg.mc.seed = cfg.seed;
  }

  fs::create_directories(out_dir);
  std::vector<SuiteResult> suites;
  if (cfg.mode != Mode::kMc) suites = run_exact(cfg.exact);
  if (cfg.mode != Mode::kExact) {
    auto m = run_mc(cfg.mc, dump_paths ? (out_dir / "paths.csv").string() : std::string());
    suites.insert(suites.end(), m.begin(), m.end());
  }

  bool pass = true;
  json list = json::array();
  for (const auto& r : suites) {
    if (r.asserted && !r.pass) pass = false;
    list.push_back(to_json(r));
  }
  json config = {{"mode", mode_name(cfg.mode)}, {"seed", cfg.seed}, {"tol", cfg.tol}};
  if (cfg.mode != Mode::kMc) {
    const auto& e = cfg.exact;
    config["exact"] = {{"scenarios", e.scenarios},
                       {"depth", e.depth},
                       {"branching", e.branching},
                       {"natural_specs", e.natural_specs},
                       {"recursion_scenarios", e.recursion_scenarios},
                       {"transmission_scenarios", e.transmission_scenarios},
                       {"honest_scenarios", e.honest_scenarios},
                       {"adapted_per_scenario", e.adapted_per_scenario},
                       {"stopping_samples", e.stopping_samples},
                       {"linear_floor", e.linear_floor},
                       {"archive_limit", e.archive_limit},
                       {"asserted", e.asserted},
                       {"scenario_file", cfg.scenario_file},
                       {"single", cfg.single},
                       {"n_defaults", cfg.n_defaults},
                       {"inject_arbitrage", cfg.inject_arbitrage}};
  }
  if (cfg.mode != Mode::kExact) config["mc"] = mc::to_json(cfg.mc);

  json report = {{"tool", "enlarge_lab"}, {"timestamp", utc_timestamp()}, {"config", config},
                 {"pass", pass},          {"suites", list}};
  write_atomically(out_dir / "report.json", report.dump(2) + "\n");
  write_atomically(out_dir / "summary.csv", summary_csv(suites));
  if (cfg.mode != Mode::kExact) write_atomically(out_dir / "mc_bins.csv", bins_csv(suites));
  return report;
}

std::string render_report(const fs::path& dir) {
  const fs::path path = dir / "report.json";
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingReport, "no report.json in " + dir.string());
  json rep;
  try {
    std::ifstream in(path);
    rep = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMissingReport, path.string() + ": " + e.what());
  }
  std::ostringstream os;
  os << "report " << path.string() << " (" << rep.value("timestamp", "?") << ")\n";
  for (const char* engine : {"exact", "mc"}) {
    bool header = false;
    for (const auto& s : rep.at("suites")) {
      if (s.at("engine") != engine) continue;
      if (!header) {
        os << "\n[" << engine << "]\n";
        os << std::left << std::setw(24) << "suite" << std::setw(10) << "result" << std::setw(10) << "cases"
           << std::setw(10) << "failures" << "worst\n";
        header = true;
      }
      std::string result = s.at("pass").get<bool>() ? "PASS" : "FAIL";
      if (!s.at("asserted").get<bool>()) result = "info";
      os << std::left << std::setw(24) << s.at("name").get<std::string>() << std::setw(10) << result
         << std::setw(10) << s.at("cases").get<int>() << std::setw(10) << s.at("failures").get<int>()
         << s.at("worst").get<double>() << '\n';
      const auto& d = s.at("details");
      if (d.contains("levels") && s.at("name") == "transmission")
        for (const auto& l : d.at("levels"))
          os << "  LP level " << l.at("level").get<int>() << ": feasible " << l.at("feasible").get<int>() << "/"
             << l.at("checked").get<int>() << '\n';
    }
  }
  os << "\noverall: " << (rep.at("pass").get<bool>() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

int lab_main(int argc, char** argv) {
  CLI::App app{"Enlarged-filtration verification lab"};
  app.require_subcommand(1);

  std::string gen_config, gen_out = "scenario.json";
  std::uint64_t gen_seed = 0;
  int gen_depth = 3, gen_branching = 2, gen_defaults = 1;
  auto* gen = app.add_subcommand("gen", "Generate a random scenario file");
  gen->add_option("--config", gen_config, "Generator spec JSON {seed, depth, branching, n_defaults}");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Generator seed");
  auto* gen_depth_opt = gen->add_option("--depth", gen_depth, "Tree depth");
  auto* gen_branching_opt = gen->add_option("--branching", gen_branching, "Maximum children per node");
  auto* gen_defaults_opt = gen->add_option("--defaults", gen_defaults, "Number of default times");
  gen->add_option("--out", gen_out, "Output scenario file");

  std::string run_config, run_mode, out_dir = "out";
  std::uint64_t run_seed = 0;
  double run_tol = 0.0;
  bool dump_paths = false;
  auto* run = app.add_subcommand("run", "Run verification suites");
  run->add_option("--config", run_config, "Experiment config JSON")->required();
  run->add_option("--mode", run_mode, "exact, mc or both");
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Seed for generated scenarios and paths");
  auto* run_tol_opt = run->add_option("--tol", run_tol, "Exact-engine tolerance");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--dump-paths", dump_paths, "Write per-path CSV for the MC engine");

  std::string report_dir = "out";
  auto* report = app.add_subcommand("report", "Summarize a report directory");
  report->add_option("--out,dir", report_dir, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigFailure;
  }

  try {
    apply_threads();
    if (*gen) {
      json spec = gen_config.empty() ? json::object() : read_json_file(gen_config);
      check_keys(spec, {"seed", "depth", "branching", "n_defaults"}, "generator spec");
      GeneratorConfig g;
      bool seeded = false;
      try {
        if (spec.contains("seed")) g.seed = spec.at("seed").get<std::uint64_t>(), seeded = true;
        g.depth = spec.value("depth", gen_depth);
        g.branching = spec.value("branching", gen_branching);
        g.n_defaults = spec.value("n_defaults", gen_defaults);
      } catch (const json::exception& e) {
        throw config_error(e.what());
      }
      if (gen_seed_opt->count()) g.seed = gen_seed, seeded = true;
      if (gen_depth_opt->count()) g.depth = gen_depth;
      if (gen_branching_opt->count()) g.branching = gen_branching;
      if (gen_defaults_opt->count()) g.n_defaults = gen_defaults;
      if (!seeded) throw config_error("gen requires a seed");
      if (g.depth < 1 || g.depth > kMaxDepth) throw config_error("depth must be in [1, 8]");
      if (g.branching < 2 || g.branching > kMaxBranching) throw config_error("branching must be in [2, 4]");
      if (g.n_defaults < 1) throw config_error("n_defaults must be positive");
      const Scenario sc = generate_scenario(g);
      write_atomically(gen_out, scenario_to_json(sc).dump(2) + "\n");
      std::cout << "wrote " << gen_out << " (acceptance rate " << sc.acceptance_rate() << ")\n";
      return kPass;
    }
    if (*run) {
      ExperimentConfig cfg = parse_experiment(read_json_file(run_config));
      if (!run_mode.empty()) cfg.mode = parse_mode(run_mode);
      if (run_seed_opt->count()) {
        cfg.seed = run_seed;
        cfg.has_seed = true;
        cfg.mc_seed_given = false;
      }
      if (run_tol_opt->count()) {
        if (!(run_tol > 0.0)) throw config_error("tol must be positive");
        cfg.tol = run_tol;
      }
      const json rep = run_report(cfg, out_dir, dump_paths);
      for (const auto& s : rep.at("suites"))
        if (s.at("asserted").get<bool>() && !s.at("pass").get<bool>())
          std::cout << "FAILED suite: " << s.at("name").get<std::string>() << '\n';
      std::cout << "report written to " << (fs::path(out_dir) / "report.json").string() << '\n';
      return rep.at("pass").get<bool>() ? kPass : kSuiteFailure;
    }
    std::cout << render_report(report_dir);
    return kPass;
  } catch (const Error& e) {
    const bool config = e.code() == ErrorCode::kConfigError || e.code() == ErrorCode::kMissingReport;
    return report_error(e, config ? kConfigFailure : kEngineFailure);
  } catch (const fs::filesystem_error& e) {
    return report_error(e, kConfigFailure);
  } catch (const std::exception& e) {
    return report_error(e, kEngineFailure);
  }
}

}  // namespace enlarge::lab
