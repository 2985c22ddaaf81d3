#include "enlarge/scenario.hpp"

namespace enlarge {
namespace {

using Q = Rational;
using json = nlohmann::json;

int pick(std::mt19937_64& rng, int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); }

// Centered increments (v - E v) / scale for integer draws v in [-9, 9].
std::vector<Q> centered(std::mt19937_64& rng, const std::vector<Q>& prob, int scale) {
  for (;;) {
    std::vector<Q> v;
    Q mean = Q(0);
    for (const Q& p : prob) {
      v.emplace_back(pick(rng, -9, 9));
      mean += p * v.back();
    }
    bool flat = true;
    for (const Q& x : v) flat = flat && x == v.front();
    if (flat) continue;
    for (Q& x : v) x = (x - mean) / Q(scale);
    return v;
  }
}

std::vector<Q> child_probs(const FiniteFilteredSpace<Q>& sp, int t, int c) {
  std::vector<Q> p;
  for (int k : sp.children(t, c)) p.push_back(sp.transition(t, k));
  return p;
}

bool screen(const NaturalModelSpec<Q>& spec, double z_min, double z_max) {
  const AdaptedProcess<Q> z = spec.z();
  const auto& sp = spec.space();
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) {
      const double v = to_double(z.at(t, c));
      if (!(v > z_min) || !(v < z_max)) return false;
    }
  try {
    proportional_masses(spec);
  } catch (const Error&) {
    return false;
  }
  return true;
}

std::string str(const Q& x) { return ScalarTraits<Q>::to_string(x); }
Q parse(const json& j) { return ScalarTraits<Q>::parse(j.get<std::string>()); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SpacePtr<Q> random_space(std::mt19937_64& rng, int depth, int branching) {
  return tree_space<Q>(depth, [&](int, const std::vector<int>&) {
    const int k = pick(rng, 2, std::max(2, branching));
    std::vector<int> w(k);
    int total = 0;
    for (int& x : w) total += (x = pick(rng, 1, 9));
    std::vector<Q> p;
    for (int x : w) p.push_back(Q(x, total));
    return p;
  });
}

NaturalModelSpec<Q> random_separated_spec(std::mt19937_64& rng, const SpacePtr<Q>& sp) {
  NaturalModelSpec<Q> spec{AdaptedProcess<Q>(sp, 1), PredictableProcess<Q>(sp, 1), std::nullopt, std::nullopt};
  for (int c = 0; c < sp->num_cells(0); ++c) spec.l.at(0, c) = Q(1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& kids = sp->children(t - 1, c);
      const Q parent = spec.l.at(t - 1, c);
      if (t == 1 || rng() % 2 == 0) {
        spec.decay.at(t, c) = Q(pick(rng, 12, 18), 20);
        for (int k : kids) spec.l.at(t, k) = parent;
      } else {
        spec.decay.at(t, c) = Q(1);
        const auto m = centered(rng, child_probs(*sp, t - 1, c), 40);
        for (std::size_t j = 0; j < kids.size(); ++j) spec.l.at(t, kids[j]) = parent * (Q(1) + m[j]);
      }
    }
  return spec;
}

AdaptedProcess<Q> random_straddling_asset(std::mt19937_64& rng, const SpacePtr<Q>& sp) {
  AdaptedProcess<Q> s(sp, 1);
  for (int c = 0; c < sp->num_cells(0); ++c) s.at(0, c) = Q(1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& kids = sp->children(t - 1, c);
      const auto r = centered(rng, child_probs(*sp, t - 1, c), 40);
      Q low = r.front();
      for (const Q& x : r) low = x < low ? x : low;
      // Drift in [0, 0.4 |min r|) keeps the children straddling the parent.
      const Q drift = -low * Q(pick(rng, 0, 2), 5);
      for (std::size_t j = 0; j < kids.size(); ++j) s.at(t, kids[j]) = s.at(t - 1, c) * (Q(1) + r[j] + drift);
    }
  return s;
}

Scenario generate_scenario(const GeneratorConfig& cfg) {
  if (cfg.depth < 1 || cfg.branching < 2 || cfg.n_defaults < 0)
    throw Error(ErrorCode::kConfigError, "generator: depth >= 1, branching >= 2, n_defaults >= 0 required");
  std::mt19937_64 rng(cfg.seed);
  for (int attempt = 1; attempt <= cfg.max_rejections; ++attempt) {
    SpacePtr<Q> sp = random_space(rng, cfg.depth, cfg.branching);
    std::vector<NaturalModelSpec<Q>> specs;
    bool ok = true;
    for (int k = 0; k < cfg.n_defaults && ok; ++k) {
      specs.push_back(random_separated_spec(rng, sp));
      ok = screen(specs.back(), cfg.z_min, cfg.z_max);
    }
    if (!ok) continue;
    AdaptedProcess<Q> s = random_straddling_asset(rng, sp);
    return {sp, std::move(specs), std::move(s), attempt};
  }
  throw Error(ErrorCode::kGenerationFailed,
              "no scenario passed the screen in " + std::to_string(cfg.max_rejections) + " draws");
}

HonestTimeScenario generate_honest_time(std::uint64_t seed, int depth) {
  std::mt19937_64 rng(seed);
  const Q p(pick(rng, 3, 7), 10);
  const Q up = Q(1) + Q(pick(rng, 1, 4), 20);
  const Q down = (Q(1) - p * up) / (Q(1) - p) - Q(pick(rng, 0, 3), 100);
  HonestTimeScenario out;
  out.space = binomial_space<Q>(depth, p);
  out.stop_step = pick(rng, 1, std::max(1, depth - 2));
  const auto& names = out.space->atom_names();
  out.x = adapted_from_atoms<Q>(out.space, 1, [&](int t, int a, int) {
    Q v = Q(1);
    for (int i = 0; i < t; ++i) v *= names[a][i] == 'u' ? up : down;
    return v;
  });
  out.s = adapted_from_atoms<Q>(out.space, 1,
                                [&](int t, int a, int) { return out.x.on_atom(std::min(t, out.stop_step), a); });
  return out;
}

SpacePtr<double> to_double_space(const SpacePtr<Q>& sp) {
  std::vector<double> prob;
  for (const Q& p : sp->probabilities()) prob.push_back(to_double(p));
  return std::make_shared<const FiniteFilteredSpace<double>>(sp->atom_names(), std::move(prob), sp->partitions());
}

AdaptedProcess<double> to_double_process(const AdaptedProcess<Q>& x, const SpacePtr<double>& sp) {
  AdaptedProcess<double> out(sp, x.dim());
  for (int t = 0; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c)
      for (int h = 0; h < x.dim(); ++h) out.at(t, c, h) = to_double(x.at(t, c, h));
  return out;
}

PredictableProcess<double> to_double_process(const PredictableProcess<Q>& x, const SpacePtr<double>& sp) {
  PredictableProcess<double> out(sp, x.dim());
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int h = 0; h < x.dim(); ++h) out.at(t, c, h) = to_double(x.at(t, c, h));
  return out;
}

NaturalModelSpec<double> to_double_spec(const NaturalModelSpec<Q>& spec, const SpacePtr<double>& sp) {
  NaturalModelSpec<double> out{to_double_process(spec.l, sp), to_double_process(spec.decay, sp), std::nullopt,
                               std::nullopt};
  if (spec.p) out.p = to_double_process(*spec.p, sp);
  if (spec.yfac) out.yfac = to_double_process(*spec.yfac, sp);
  return out;
}

RandomTimeExtension<double> to_double_extension(const RandomTimeExtension<Q>& ext, const SpacePtr<double>& sp) {
  RandomTimeExtension<double> out{sp, ext.levels, {}, ext.tau};
  for (const auto& row : ext.weights) {
    std::vector<double> w;
    for (const Q& x : row) w.push_back(to_double(x));
    out.weights.push_back(std::move(w));
  }
  return out;
}

DoubleScenario to_double_scenario(const Scenario& sc) {
  DoubleScenario out{to_double_space(sc.space), {}, AdaptedProcess<double>()};
  for (const auto& spec : sc.defaults) out.defaults.push_back(to_double_spec(spec, out.space));
  out.s = to_double_process(sc.s, out.space);
  return out;
}

json space_to_json(const FiniteFilteredSpace<Q>& sp) {
  json prob = json::array();
  for (const Q& p : sp.probabilities()) prob.push_back(str(p));
  return {{"atoms", sp.atom_names()}, {"prob", prob}, {"partitions", sp.partitions()}};
}

SpacePtr<Q> space_from_json(const json& j) {
  std::vector<Q> prob;
  for (const auto& p : j.at("prob")) prob.push_back(parse(p));
  return std::make_shared<const FiniteFilteredSpace<Q>>(j.at("atoms").get<std::vector<std::string>>(),
                                                        std::move(prob),
                                                        j.at("partitions").get<std::vector<std::vector<int>>>());
}

json process_to_json(const AdaptedProcess<Q>& x) {
  json out = json::array();
  for (int t = 0; t <= x.horizon(); ++t) {
    json row = json::array();
    for (int c = 0; c < x.space()->num_cells(t); ++c) {
      json v = json::array();
      for (int h = 0; h < x.dim(); ++h) v.push_back(str(x.at(t, c, h)));
      row.push_back(std::move(v));
    }
    out.push_back(std::move(row));
  }
  return {{"kind", "adapted"}, {"dim", x.dim()}, {"values", out}};
}

AdaptedProcess<Q> adapted_from_json(const json& j, const SpacePtr<Q>& sp) {
  AdaptedProcess<Q> x(sp, j.at("dim").get<int>());
  const auto& v = j.at("values");
  if (static_cast<int>(v.size()) != sp->horizon() + 1)
    throw Error(ErrorCode::kDimensionMismatch, "process: time count differs from space");
  for (int t = 0; t <= sp->horizon(); ++t) {
    if (static_cast<int>(v[t].size()) != sp->num_cells(t))
      throw Error(ErrorCode::kDimensionMismatch, "process: cell count differs at t=" + std::to_string(t));
    for (int c = 0; c < sp->num_cells(t); ++c)
      for (int h = 0; h < x.dim(); ++h) x.at(t, c, h) = parse(v[t][c].at(h));
  }
  return x;
}

json process_to_json(const PredictableProcess<Q>& x) {
  const auto& sp = x.space();
  json out = json::array();
  for (int t = 1; t <= sp->horizon(); ++t) {
    json row = json::array();
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      json v = json::array();
      for (int h = 0; h < x.dim(); ++h) v.push_back(str(x.at(t, c, h)));
      row.push_back(std::move(v));
    }
    out.push_back(std::move(row));
  }
  return {{"kind", "predictable"}, {"dim", x.dim()}, {"values", out}};
}

PredictableProcess<Q> predictable_from_json(const json& j, const SpacePtr<Q>& sp) {
  PredictableProcess<Q> x(sp, j.at("dim").get<int>());
  const auto& v = j.at("values");
  if (static_cast<int>(v.size()) != sp->horizon())
    throw Error(ErrorCode::kDimensionMismatch, "process: step count differs from space");
  for (int t = 1; t <= sp->horizon(); ++t) {
    if (static_cast<int>(v[t - 1].size()) != sp->num_cells(t - 1))
      throw Error(ErrorCode::kDimensionMismatch, "process: cell count differs at t=" + std::to_string(t));
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int h = 0; h < x.dim(); ++h) x.at(t, c, h) = parse(v[t - 1][c].at(h));
  }
  return x;
}

json extension_to_json(const RandomTimeExtension<Q>& ext) {
  json weights = json::array(), tau = json::array();
  for (std::size_t a = 0; a < ext.weights.size(); ++a) {
    json w = json::array(), u = json::array();
    for (int l = 0; l < ext.levels; ++l) {
      w.push_back(str(ext.weights[a][l]));
      if (ext.tau[a][l] == kNever)
        u.push_back("inf");
      else
        u.push_back(ext.tau[a][l]);
    }
    weights.push_back(std::move(w));
    tau.push_back(std::move(u));
  }
  return {{"levels", ext.levels}, {"weights", weights}, {"tau", tau}};
}

json scenario_to_json(const Scenario& sc) {
  json defaults = json::array();
  for (const auto& spec : sc.defaults) {
    json d{{"l", process_to_json(spec.l)},
           {"decay", process_to_json(spec.decay)},
           {"extension", extension_to_json(construct_tau_proportional(spec).extension)}};
    defaults.push_back(std::move(d));
  }
  return {{"space", space_to_json(*sc.space)},
          {"defaults", defaults},
          {"market", {{"s", process_to_json(sc.s)}}},
          {"attempts", sc.attempts},
          {"acceptance_rate", sc.acceptance_rate()}};
}

Scenario scenario_from_json(const json& j) {
  try {
    Scenario sc{space_from_json(j.at("space")), {}, AdaptedProcess<Q>(), j.value("attempts", 1)};
    for (const auto& d : j.at("defaults")) {
      NaturalModelSpec<Q> spec{adapted_from_json(d.at("l"), sc.space), predictable_from_json(d.at("decay"), sc.space),
                               std::nullopt, std::nullopt};
      spec.validate();
      sc.defaults.push_back(std::move(spec));
    }
    sc.s = adapted_from_json(j.at("market").at("s"), sc.space);
    return sc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("scenario file: ") + e.what());
  }
}

}  // namespace enlarge
