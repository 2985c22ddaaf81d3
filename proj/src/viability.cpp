#include "enlarge/viability.hpp"

#include "enlarge/lp.hpp"

#include <algorithm>
#include <cmath>

namespace enlarge {
namespace {

using Space = FiniteFilteredSpace<double>;

// Process on `target` whose cell at t reads X at cell_map[t][cell].
AdaptedProcess<double> pull_back(const AdaptedProcess<double>& x, const SpacePtr<double>& target,
                                 const std::vector<std::vector<int>>& cell_map) {
  AdaptedProcess<double> out(target, x.dim());
  for (int t = 0; t <= target->horizon(); ++t)
    for (int c = 0; c < target->num_cells(t); ++c)
      for (int h = 0; h < x.dim(); ++h) out.at(t, c, h) = x.at(t, cell_map[t][c], h);
  return out;
}

std::vector<std::vector<int>> identity_cells(const Space& sp) {
  std::vector<std::vector<int>> out(sp.horizon() + 1);
  for (int t = 0; t <= sp.horizon(); ++t)
    for (int c = 0; c < sp.num_cells(t); ++c) out[t].push_back(c);
  return out;
}

AdaptedProcess<double> concat(const AdaptedProcess<double>& a, const AdaptedProcess<double>& b) {
  AdaptedProcess<double> out(a.space(), a.dim() + b.dim());
  for (int t = 0; t <= a.horizon(); ++t)
    for (int c = 0; c < a.space()->num_cells(t); ++c) {
      for (int h = 0; h < a.dim(); ++h) out.at(t, c, h) = a.at(t, c, h);
      for (int h = 0; h < b.dim(); ++h) out.at(t, c, a.dim() + h) = b.at(t, c, h);
    }
  return out;
}

struct NodeLp {
  bool feasible = false;
  double min_weight = 0.0;
  std::vector<double> weights;
  std::optional<ArbitrageCertificate> arbitrage;
};

NodeLp solve_node(const std::vector<std::vector<double>>& dS, const std::vector<double>& prob, double min_weight) {
  const int m = static_cast<int>(dS.size());
  const int d = m ? static_cast<int>(dS[0].size()) : 0;
  std::vector<double> scale(d, 0.0);
  for (const auto& row : dS)
    for (int h = 0; h < d; ++h) scale[h] = std::max(scale[h], std::fabs(row[h]));

  NodeLp out;
  lp::Problem prices;
  prices.num_vars = m + 1;
  prices.objective.assign(m + 1, 0.0);
  prices.objective[m] = 1.0;
  for (int j = 0; j < m; ++j) {
    lp::Constraint c{std::vector<double>(m + 1, 0.0), lp::Sense::kGreaterEq, 0.0};
    c.coef[j] = 1.0;
    c.coef[m] = -1.0;
    prices.constraints.push_back(std::move(c));
  }
  {
    lp::Constraint c{std::vector<double>(m + 1, 1.0), lp::Sense::kEq, 1.0};
    c.coef[m] = 0.0;
    prices.constraints.push_back(std::move(c));
  }
  for (int h = 0; h < d; ++h) {
    if (scale[h] == 0.0) continue;
    lp::Constraint c{std::vector<double>(m + 1, 0.0), lp::Sense::kEq, 0.0};
    for (int j = 0; j < m; ++j) c.coef[j] = dS[j][h] / scale[h];
    prices.constraints.push_back(std::move(c));
  }
  const lp::Solution sol = lp::solve(prices);
  if (sol.status == lp::Status::kOptimal) {
    out.min_weight = sol.x[m];
    out.weights.assign(sol.x.begin(), sol.x.begin() + m);
  }
  out.feasible = sol.status == lp::Status::kOptimal && out.min_weight > min_weight;
  if (out.feasible) return out;

  // Strategy with nonnegative gain in every child and positive expected gain.
  lp::Problem arb;
  arb.num_vars = 2 * d;
  arb.objective.assign(2 * d, 0.0);
  for (int h = 0; h < d; ++h) {
    if (scale[h] == 0.0) continue;
    double g = 0.0;
    for (int j = 0; j < m; ++j) g += prob[j] * dS[j][h] / scale[h];
    arb.objective[h] = g;
    arb.objective[d + h] = -g;
    lp::Constraint up{std::vector<double>(2 * d, 0.0), lp::Sense::kLessEq, 1.0};
    up.coef[h] = 1.0;
    arb.constraints.push_back(up);
    lp::Constraint down{std::vector<double>(2 * d, 0.0), lp::Sense::kLessEq, 1.0};
    down.coef[d + h] = 1.0;
    arb.constraints.push_back(down);
  }
  for (int j = 0; j < m; ++j) {
    lp::Constraint c{std::vector<double>(2 * d, 0.0), lp::Sense::kGreaterEq, 0.0};
    for (int h = 0; h < d; ++h) {
      if (scale[h] == 0.0) continue;
      c.coef[h] = dS[j][h] / scale[h];
      c.coef[d + h] = -dS[j][h] / scale[h];
    }
    arb.constraints.push_back(std::move(c));
  }
  const lp::Solution asol = lp::solve(arb);
  if (asol.status == lp::Status::kOptimal && asol.value > 1e-12) {
    ArbitrageCertificate cert;
    cert.strategy.assign(d, 0.0);
    for (int h = 0; h < d; ++h)
      if (scale[h] > 0.0) cert.strategy[h] = (asol.x[h] - asol.x[d + h]) / scale[h];
    cert.min_gain = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      double g = 0.0;
      for (int h = 0; h < d; ++h) g += cert.strategy[h] * dS[j][h];
      cert.expected_gain += prob[j] * g;
      cert.min_gain = std::min(cert.min_gain, g);
    }
    out.arbitrage = std::move(cert);
  }
  return out;
}

}  // namespace

int MarketModel::horizon_on(int t, int cell) const {
  if (horizon.empty()) return space->horizon();
  return horizon[space->atoms_in(t, cell).front()];
}

void MarketModel::validate() const {
  if (s.space() != space) throw Error(ErrorCode::kDimensionMismatch, "market: S lives on another space");
  for (int t = 0; t <= space->horizon(); ++t)
    for (int c = 0; c < space->num_cells(t); ++c)
      for (int h = 0; h < s.dim(); ++h)
        if (!(s.at(t, c, h) > 0)) throw Error(ErrorCode::kNonPositive, "market: S must be strictly positive");
  if (horizon.empty()) return;
  if (static_cast<int>(horizon.size()) != space->num_atoms())
    throw Error(ErrorCode::kDimensionMismatch, "market: horizon size differs from atom count");
  for (int t = 1; t <= space->horizon(); ++t)
    for (int c = 0; c < space->num_cells(t - 1); ++c) {
      const auto& atoms = space->atoms_in(t - 1, c);
      const bool active = horizon[atoms.front()] >= t;
      for (int a : atoms)
        if ((horizon[a] >= t) != active)
          throw Error(ErrorCode::kNotPredictable, "market: horizon is not a stopping time");
    }
}

DeflatorReport deflator_check(const DeflatorCandidate& cand, const MarketModel& market, double tol) {
  const auto& sp = market.space;
  const auto& y = cand.y;
  DeflatorReport rep;
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      if (!market.step_active(t, c)) continue;
      const double yc = y.at(t - 1, c);
      if (!(yc > 0)) throw Error(ErrorCode::kNonPositive, "deflator not positive at t=" + std::to_string(t - 1));
      double ey = 0.0;
      std::vector<double> eys(market.s.dim(), 0.0);
      for (int k : sp->children(t - 1, c)) {
        const double p = sp->transition(t - 1, k);
        if (!(y.at(t, k) > 0)) throw Error(ErrorCode::kNonPositive, "deflator not positive at t=" + std::to_string(t));
        ey += p * y.at(t, k);
        for (int h = 0; h < market.s.dim(); ++h) eys[h] += p * y.at(t, k) * market.s.at(t, k, h);
      }
      rep.drift_y = std::max(rep.drift_y, std::fabs(ey - yc));
      for (int h = 0; h < market.s.dim(); ++h)
        rep.drift_ys = std::max(rep.drift_ys, std::fabs(eys[h] - yc * market.s.at(t - 1, c, h)));
    }
  rep.pass = rep.drift_y <= tol && rep.drift_ys <= tol;
  return rep;
}

LpOracleReport lp_deflator_oracle(const MarketModel& market, double min_weight) {
  market.validate();
  const auto& sp = market.space;
  LpOracleReport rep;
  rep.feasible = true;
  rep.min_state_weight = 1.0;
  DeflatorCandidate cand{AdaptedProcess<double>(sp, 1), DeflatorSource::kLpCertificate, 0, 1.0};
  for (int c = 0; c < sp->num_cells(0); ++c) cand.y.at(0, c) = 1.0;
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& kids = sp->children(t - 1, c);
      if (!market.step_active(t, c)) {
        for (int k : kids) cand.y.at(t, k) = cand.y.at(t - 1, c);
        continue;
      }
      ++rep.nodes_checked;
      std::vector<std::vector<double>> ds;
      std::vector<double> prob;
      for (int k : kids) {
        std::vector<double> row(market.s.dim());
        for (int h = 0; h < market.s.dim(); ++h) row[h] = market.s.increment(t, k, h);
        ds.push_back(std::move(row));
        prob.push_back(sp->transition(t - 1, k));
      }
      NodeLp node = solve_node(ds, prob, min_weight);
      rep.min_state_weight = std::min(rep.min_state_weight, node.min_weight);
      if (!node.feasible) {
        if (rep.feasible && node.arbitrage) {
          rep.arbitrage = std::move(node.arbitrage);
          rep.arbitrage->t = t;
          rep.arbitrage->cell = c;
        }
        rep.feasible = false;
        for (int k : kids) cand.y.at(t, k) = cand.y.at(t - 1, c);
        continue;
      }
      for (std::size_t j = 0; j < kids.size(); ++j)
        cand.y.at(t, kids[j]) = cand.y.at(t - 1, c) * node.weights[j] / prob[j];
    }
  if (rep.feasible) rep.deflator = std::move(cand);
  return rep;
}

namespace {

// Per-step factor of the chosen deflator form at G child k of cell c at t-1.
struct FactorContext {
  const DriftFactors<double>& f;
  const EnlargedFiltration<double>& g;
  PredictableProcess<double> gamma_n;  // Gamma(N) steps on G
};

double phi_dn(const FactorContext& ctx, int t, int c, int k) {
  const int bk = ctx.g.base_cell[t][k];
  double s = 0.0;
  for (int j = 0; j < ctx.f.n.dim(); ++j) s += ctx.f.phi.at(t, c, j) * ctx.f.n.increment(t, bk, j);
  return s;
}

double phi_dn_tilde(const FactorContext& ctx, int t, int c, int k) {
  double s = phi_dn(ctx, t, c, k);
  for (int j = 0; j < ctx.f.n.dim(); ++j) s -= ctx.f.phi.at(t, c, j) * ctx.gamma_n.at(t, c, j);
  return s;
}

FactorContext make_context(const DriftFactors<double>& f, const EnlargedFiltration<double>& g) {
  return {f, g, increments(compensator(g.lift(f.n)))};
}

}  // namespace

DeflatorCandidate build_exponential_deflator(const DriftFactors<double>& factors,
                                             const EnlargedFiltration<double>& g, DeflatorForm form) {
  const auto& sp = g.space;
  const FactorContext ctx = make_context(factors, g);
  DeflatorCandidate cand{AdaptedProcess<double>(sp, 1), DeflatorSource::kExponential, 0, 1.0};
  cand.min_step_factor = std::numeric_limits<double>::infinity();
  for (int c = 0; c < sp->num_cells(0); ++c) cand.y.at(0, c) = 1.0;
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int k : sp->children(t - 1, c)) {
        double factor;
        if (form == DeflatorForm::kDensity) {
          const double denom = 1.0 + phi_dn(ctx, t, c, k);
          factor = denom > 0.0 ? 1.0 / denom : 0.0;
          if (!(denom > 0.0)) ++cand.nonpositive_nodes;
        } else {
          factor = 1.0 - phi_dn_tilde(ctx, t, c, k);
          if (!(factor > 0.0)) ++cand.nonpositive_nodes;
        }
        cand.min_step_factor = std::min(cand.min_step_factor, factor);
        cand.y.at(t, k) = cand.y.at(t - 1, c) * factor;
      }
  if (sp->horizon() == 0) cand.min_step_factor = 1.0;
  return cand;
}

double linear_factor_floor(const DriftFactors<double>& factors, const EnlargedFiltration<double>& g) {
  const auto& sp = g.space;
  const FactorContext ctx = make_context(factors, g);
  double floor = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int k : sp->children(t - 1, c)) floor = std::min(floor, 1.0 - phi_dn_tilde(ctx, t, c, k));
  return sp->horizon() == 0 ? 1.0 : floor;
}

ViabilityConditions fullviability_conditions(const DriftFactors<double>& factors,
                                             const EnlargedFiltration<double>& g,
                                             const std::vector<int>& horizon) {
  const auto& sp = g.space;
  const FactorContext ctx = make_context(factors, g);
  ViabilityConditions out;
  AdaptedProcess<double> acc(sp, 1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const bool active = horizon.empty() || horizon[sp->atoms_in(t - 1, c).front()] >= t;
      for (int k : sp->children(t - 1, c)) {
        acc.at(t, k) = acc.at(t - 1, c);
        if (!active) continue;
        const double x = phi_dn(ctx, t, c, k);
        if (std::fabs(1.0 + x) < 1e-14) {
          ++out.zero_division_nodes;
          continue;
        }
        const double r = x / (1.0 + x);
        acc.at(t, k) += r * r;
        out.ratio_term_max = std::max(out.ratio_term_max, std::sqrt(acc.at(t, k)));
      }
    }
  const int horizon_t = sp->horizon();
  for (int a = 0; a < sp->num_atoms(); ++a) out.ratio_term_mean += sp->atom_prob(a) * std::sqrt(acc.on_atom(horizon_t, a));
  return out;
}

std::vector<AdaptedProcess<double>> driver_basis(const SpacePtr<double>& sp) {
  return components(indicator_driver(sp));
}

RecursiveFactors recursive_factors(const std::vector<NaturalModelSpec<double>>& specs,
                                   const AdaptedProcess<double>& driver, double tol) {
  RecursiveFactors out;
  if (specs.empty()) return out;
  const SpacePtr<double> f = specs.front().space();
  const auto basis = components(driver);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto built = construct_tau_proportional(specs[k]);
    const RecursionLevel* prev = k == 0 ? nullptr : &out.levels.back();
    EnlargedFiltration<double> g =
        prev ? progressive_enlarge(lift_extension(built.extension, prev->g)) : progressive_enlarge(built.extension);
    std::vector<std::vector<int>> base_root = prev ? prev->root_cell : identity_cells(*f);
    std::vector<std::vector<int>> root(g.base_cell.size());
    for (std::size_t t = 0; t < g.base_cell.size(); ++t)
      for (int bc : g.base_cell[t]) root[t].push_back(base_root[t][bc]);

    // Gamma^{(k-1)|k}(X~) against [N, X]^{G^{:(k-1)} p} for raw F-martingales X.
    const AdaptedProcess<double>& n_level = driver;
    const AdaptedProcess<double> n_base = pull_back(n_level, g.base, base_root);
    std::vector<PredictableProcess<double>> regressors, targets;
    for (const auto& x : basis) {
      const AdaptedProcess<double> xb = pull_back(x, g.base, base_root);
      targets.push_back(increments(compensator(g.lift(doob_decompose(xb).martingale))));
      regressors.push_back(pred_bracket_steps(n_base, xb));
    }
    DriftFactors<double> fit = fit_factor_system(g, n_base, regressors, targets);

    RecursionLevel level{std::move(g), std::move(root), n_level, std::move(fit), {}, {}, {}, 0.0, 0.0, false};
    const auto& sp = level.g.space;
    if (!prev) {
      level.n_full = n_level;
      level.phi_full = level.level_fit.phi;
      level.gamma = PredictableProcess<double>(f, 0);
    } else {
      const int dp = prev->n_full.dim(), dk = n_level.dim(), dw = driver.dim();
      level.n_full = concat(prev->n_full, n_level);
      level.gamma = PredictableProcess<double>(f, dp * dk);
      double worst = 0.0;
      for (int t = 1; t <= f->horizon(); ++t)
        for (int c = 0; c < f->num_cells(t - 1); ++c)
          for (int i = 0; i < dk; ++i)
            for (int j = 0; j < dp; ++j) {
              Matrix<double> a(dw, 1);
              std::vector<double> b(dw, 0.0);
              for (int kid : f->children(t - 1, c)) {
                const double p = f->transition(t - 1, kid);
                const double ni = n_level.increment(t, kid, i);
                const double nj = prev->n_full.increment(t, kid, j);
                for (int h = 0; h < dw; ++h) {
                  a(h, 0) += p * ni * driver.increment(t, kid, h);
                  b[h] += p * nj * ni * driver.increment(t, kid, h);
                }
              }
              const auto ls = min_norm_least_squares(a, b);
              level.gamma.at(t, c, j * dk + i) = ls.x[0];
              worst = std::max(worst, ls.residual);
            }
      level.gamma_residual = worst;
      level.phi_full = PredictableProcess<double>(sp, dp + dk);
      for (int t = 1; t <= sp->horizon(); ++t)
        for (int c = 0; c < sp->num_cells(t - 1); ++c) {
          const int bc = level.g.base_cell[t - 1][c];
          const int fc = level.root_cell[t - 1][c];
          for (int j = 0; j < dp; ++j) level.phi_full.at(t, c, j) = prev->phi_full.at(t, bc, j);
          for (int i = 0; i < dk; ++i) {
            double coef = 1.0;
            for (int j = 0; j < dp; ++j) coef += prev->phi_full.at(t, bc, j) * level.gamma.at(t, fc, j * dk + i);
            level.phi_full.at(t, c, dp + i) = coef * level.level_fit.phi.at(t, c, i);
          }
        }
    }
    // Direct Gamma^{:k}(X) against phi^{:k} . [N^{:k}, X]^{F p}.
    double worst = 0.0;
    for (const auto& x : basis) {
      const auto direct = increments(compensator(pull_back(x, sp, level.root_cell)));
      const auto br = pred_bracket_steps(level.n_full, x);
      for (int t = 1; t <= sp->horizon(); ++t)
        for (int c = 0; c < sp->num_cells(t - 1); ++c) {
          double s = 0.0;
          for (int j = 0; j < level.n_full.dim(); ++j)
            s += level.phi_full.at(t, c, j) * br.at(t, level.root_cell[t - 1][c], j);
          worst = std::max(worst, std::fabs(direct.at(t, c) - s));
        }
    }
    level.verification_residual = worst;
    level.mismatch = worst > tol;
    out.levels.push_back(std::move(level));
  }
  return out;
}

TransmissionReport transmission_check(const MarketModel& base_market,
                                      const std::vector<RandomTimeExtension<double>>& defaults,
                                      const std::vector<std::vector<int>>& horizons, double tol) {
  TransmissionReport rep;
  auto horizon_at = [&](std::size_t k) { return k < horizons.size() ? horizons[k] : std::vector<int>{}; };
  MarketModel m0{base_market.space, base_market.s, horizon_at(0)};
  TransmissionLevel level0;
  level0.lp = lp_deflator_oracle(m0);
  level0.transmitted = level0.lp.feasible;
  if (level0.lp.deflator) level0.composed_check = deflator_check(*level0.lp.deflator, m0, tol);
  rep.levels.push_back(level0);
  if (!level0.lp.feasible) {
    rep.stopped_at_base = true;
    rep.verdict = false;
    return rep;
  }
  const SpacePtr<double> f = base_market.space;
  AdaptedProcess<double> y_total = level0.lp.deflator->y;
  std::optional<EnlargedFiltration<double>> prev;
  std::vector<std::vector<int>> root = identity_cells(*f);
  bool chain = true;
  for (std::size_t k = 0; k < defaults.size(); ++k) {
    EnlargedFiltration<double> g =
        prev ? progressive_enlarge(lift_extension(defaults[k], *prev)) : progressive_enlarge(defaults[k]);
    std::vector<std::vector<int>> next_root(g.base_cell.size());
    for (std::size_t t = 0; t < g.base_cell.size(); ++t)
      for (int bc : g.base_cell[t]) next_root[t].push_back(root[t][bc]);
    root = std::move(next_root);

    TransmissionLevel lvl;
    lvl.level = static_cast<int>(k) + 1;
    MarketModel mk{g.space, pull_back(base_market.s, g.space, root), horizon_at(k + 1)};
    lvl.lp = lp_deflator_oracle(mk);
    chain = chain && lvl.lp.feasible;
    lvl.transmitted = chain;

    const AdaptedProcess<double> n = indicator_driver(g.base);
    const DriftFactors<double> fit = fit_drift_factors_unchecked(g, n, components(n));
    lvl.fit_residual = fit.max_residual;
    lvl.linear_floor = linear_factor_floor(fit, g);
    const DeflatorCandidate step = build_exponential_deflator(fit, g);
    lvl.nonpositive_nodes = step.nonpositive_nodes;
    AdaptedProcess<double> lifted = g.lift(y_total);
    for (int t = 0; t <= g.space->horizon(); ++t)
      for (int c = 0; c < g.space->num_cells(t); ++c) lifted.at(t, c) *= step.y.at(t, c);
    y_total = std::move(lifted);
    try {
      lvl.composed_check =
          deflator_check(DeflatorCandidate{y_total, DeflatorSource::kComposed, step.nonpositive_nodes, 0.0}, mk, tol);
    } catch (const Error&) {
      lvl.composed_check = DeflatorReport{};
    }
    rep.levels.push_back(std::move(lvl));
    prev = std::move(g);
  }
  rep.verdict = chain;
  return rep;
}

HonestTimeReport honest_time_control(const MarketModel& market, const std::optional<AdaptedProcess<double>>& x) {
  market.validate();
  const auto& sp = market.space;
  const AdaptedProcess<double> proc = x ? *x : market.s.component(0);
  const int horizon_t = sp->horizon();
  HonestTimeReport rep;
  rep.tau.assign(sp->num_atoms(), 0);
  for (int a = 0; a < sp->num_atoms(); ++a) {
    double best = -std::numeric_limits<double>::infinity();
    for (int t = 0; t <= horizon_t; ++t) best = std::max(best, proc.on_atom(t, a));
    for (int t = 0; t <= horizon_t; ++t)
      if (proc.on_atom(t, a) >= best - 1e-12 * (1.0 + std::fabs(best))) rep.tau[a] = t;
  }
  rep.tau_deterministic = std::all_of(rep.tau.begin(), rep.tau.end(), [&](int v) { return v == rep.tau.front(); });
  RandomTimeExtension<double> ext{sp, 1, {}, {}};
  for (int a = 0; a < sp->num_atoms(); ++a) {
    ext.weights.push_back({1.0});
    ext.tau.push_back({rep.tau[a]});
  }
  const EnlargedFiltration<double> g = progressive_enlarge(ext);
  const AdaptedProcess<double> s = g.lift(market.s);
  std::vector<int> up_to(g.space->num_atoms());
  for (int i = 0; i < g.space->num_atoms(); ++i) up_to[i] = g.tau[i];
  const LpOracleReport full = lp_deflator_oracle(MarketModel{g.space, s, {}});
  const LpOracleReport stopped = lp_deflator_oracle(MarketModel{g.space, s, up_to});
  rep.feasible_full = full.feasible;
  rep.feasible_up_to_tau = stopped.feasible;
  rep.witness = full.arbitrage;
  return rep;
}

}  // namespace enlarge
