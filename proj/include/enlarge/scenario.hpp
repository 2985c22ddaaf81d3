#pragma once

#include "enlarge/natural_model.hpp"

#include "json.hpp"

#include <cstdint>
#include <random>

namespace enlarge {

struct GeneratorConfig {
  int depth = 3;
  int branching = 2;
  int n_defaults = 1;
  std::uint64_t seed = 0;
  double z_min = 0.05;  // screen on Z over t >= 1
  double z_max = 0.95;
  int max_rejections = 10000;
};

// Random F space, separated natural specs and one straddling asset.
struct Scenario {
  SpacePtr<Rational> space;
  std::vector<NaturalModelSpec<Rational>> defaults;
  AdaptedProcess<Rational> s;
  int attempts = 1;

  double acceptance_rate() const { return 1.0 / attempts; }
};

struct DoubleScenario {
  SpacePtr<double> space;
  std::vector<NaturalModelSpec<double>> defaults;
  AdaptedProcess<double> s;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Throws GenerationFailed after cfg.max_rejections rejected draws.
Scenario generate_scenario(const GeneratorConfig& cfg);

SpacePtr<Rational> random_space(std::mt19937_64& rng, int depth, int branching);
NaturalModelSpec<Rational> random_separated_spec(std::mt19937_64& rng, const SpacePtr<Rational>& sp);
AdaptedProcess<Rational> random_straddling_asset(std::mt19937_64& rng, const SpacePtr<Rational>& sp);

// Supermartingale X on a binomial tree and the traded asset S = X stopped at
// stop_step, used for the honest-time control.
struct HonestTimeScenario {
  SpacePtr<Rational> space;
  AdaptedProcess<Rational> x;
  AdaptedProcess<Rational> s;
  int stop_step = 1;
};

HonestTimeScenario generate_honest_time(std::uint64_t seed, int depth);

// Every deterministic time plus `random_times` first-hitting times, each
// with a nonnegative test variable measurable at R.
template <typename T>
std::vector<StoppedTest<T>> sample_stopped_tests(std::mt19937_64& rng, const SpacePtr<T>& sp, int random_times);

SpacePtr<double> to_double_space(const SpacePtr<Rational>& sp);
AdaptedProcess<double> to_double_process(const AdaptedProcess<Rational>& x, const SpacePtr<double>& sp);
PredictableProcess<double> to_double_process(const PredictableProcess<Rational>& x, const SpacePtr<double>& sp);
NaturalModelSpec<double> to_double_spec(const NaturalModelSpec<Rational>& spec, const SpacePtr<double>& sp);
RandomTimeExtension<double> to_double_extension(const RandomTimeExtension<Rational>& ext,
                                                const SpacePtr<double>& sp);
DoubleScenario to_double_scenario(const Scenario& sc);

nlohmann::json space_to_json(const FiniteFilteredSpace<Rational>& sp);
SpacePtr<Rational> space_from_json(const nlohmann::json& j);
nlohmann::json process_to_json(const AdaptedProcess<Rational>& x);
AdaptedProcess<Rational> adapted_from_json(const nlohmann::json& j, const SpacePtr<Rational>& sp);
nlohmann::json process_to_json(const PredictableProcess<Rational>& x);
PredictableProcess<Rational> predictable_from_json(const nlohmann::json& j, const SpacePtr<Rational>& sp);
nlohmann::json extension_to_json(const RandomTimeExtension<Rational>& ext);
nlohmann::json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const nlohmann::json& j);

template <typename T>
std::vector<StoppedTest<T>> sample_stopped_tests(std::mt19937_64& rng, const SpacePtr<T>& sp, int random_times) {
  const int horizon_t = sp->horizon();
  const int n = sp->num_atoms();
  std::vector<StoppedTest<T>> out;
  auto xi_at = [&](const std::vector<int>& r) {
    // Random nonnegative value per cell of F_R, zero on about a third.
    std::vector<std::vector<int>> val(horizon_t + 1);
    for (int t = 0; t <= horizon_t; ++t)
      for (int c = 0; c < sp->num_cells(t); ++c) val[t].push_back(static_cast<int>(rng() % 3));
    std::vector<T> xi(n);
    for (int a = 0; a < n; ++a) {
      const int t = r[a] == kNever ? horizon_t : r[a];
      xi[a] = T(val[t][sp->cell_of(t, a)]);
    }
    return xi;
  };
  for (int t = 0; t <= horizon_t; ++t) {
    std::vector<int> r(n, t);
    out.push_back({r, xi_at(r)});
  }
  for (int k = 0; k < random_times; ++k) {
    // First time a random +-1 adapted walk reaches level 1 (or never).
    std::vector<std::vector<int>> step(horizon_t + 1);
    for (int t = 1; t <= horizon_t; ++t)
      for (int c = 0; c < sp->num_cells(t); ++c) step[t].push_back(rng() % 2 ? 1 : -1);
    std::vector<int> r(n, kNever);
    for (int a = 0; a < n; ++a) {
      int level = 0;
      for (int t = 1; t <= horizon_t && r[a] == kNever; ++t) {
        level += step[t][sp->cell_of(t, a)];
        if (level >= 1) r[a] = t;
      }
    }
    out.push_back({r, xi_at(r)});
  }
  return out;
}

}  // namespace enlarge
