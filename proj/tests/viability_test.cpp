#include "enlarge/viability.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace enlarge {
namespace {

using D = double;

// Multiplicative binomial asset S_t = prod (1 + mu + sigma eps), fair coin.
AdaptedProcess<D> binomial_asset(const SpacePtr<D>& sp, D mu, D sigma) {
  return adapted_from_atoms<D>(sp, 1, [&](int t, int a, int) {
    D s = 1.0;
    for (int i = 0; i < t; ++i) s *= 1.0 + mu + sigma * (sp->atom_names()[a][i] == 'u' ? 1.0 : -1.0);
    return s;
  });
}

AdaptedProcess<D> shifted(AdaptedProcess<D> x, D c) {
  for (int t = 0; t <= x.horizon(); ++t)
    for (int k = 0; k < x.space()->num_cells(t); ++k) x.at(t, k) += c;
  return x;
}

DeflatorCandidate walk_exponential(const SpacePtr<D>& sp, D theta) {
  auto w = testing::walk(sp);
  DeflatorCandidate cand{AdaptedProcess<D>(sp, 1), DeflatorSource::kUser, 0, 1.0};
  for (int t = 0; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) {
      const int a = sp->atoms_in(t, c).front();
      D v = 1.0;
      for (int s = 1; s <= t; ++s) v *= 1.0 - theta * (w.on_atom(s, a) - w.on_atom(s - 1, a));
      cand.y.at(t, c) = v;
    }
  return cand;
}

TEST(Viability, UnitDeflatorForMartingale) {
  auto sp = binomial_space<D>(3, 0.5);
  MarketModel m{sp, binomial_asset(sp, 0.0, 0.2), {}};
  DeflatorCandidate one{AdaptedProcess<D>(sp, 1), DeflatorSource::kUser, 0, 1.0};
  for (int t = 0; t <= 3; ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) one.y.at(t, c) = 1.0;
  EXPECT_TRUE(deflator_check(one, m, 1e-14).pass);
}

TEST(Viability, BinomialDeflatorSolvesDriftEquation) {
  auto sp = binomial_space<D>(3, 0.5);
  MarketModel m{sp, binomial_asset(sp, 0.1, 0.2), {}};
  // E[(1 - theta eps)(1.1 + 0.2 eps)] = 1 gives theta = 0.5.
  EXPECT_TRUE(deflator_check(walk_exponential(sp, 0.5), m, 1e-12).pass);
  EXPECT_FALSE(deflator_check(walk_exponential(sp, 0.4), m, 1e-12).pass);
  try {
    deflator_check(walk_exponential(sp, 1.0), m, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonPositive);
  }
}

TEST(Viability, LpFeasibleWhenChildrenStraddle) {
  auto sp = binomial_space<D>(3, 0.5);
  MarketModel m{sp, binomial_asset(sp, 0.1, 0.2), {}};
  auto rep = lp_deflator_oracle(m);
  ASSERT_TRUE(rep.feasible);
  EXPECT_EQ(rep.nodes_checked, 7);
  ASSERT_TRUE(rep.deflator.has_value());
  EXPECT_TRUE(deflator_check(*rep.deflator, m, 1e-12).pass);
  EXPECT_NEAR(rep.min_state_weight, 0.25, 1e-12);
}

TEST(Viability, LpCertifiesArbitrage) {
  auto sp = binomial_space<D>(2, 0.5);
  auto s = adapted_from_atoms<D>(sp, 1, [&](int t, int a, int) {
    return t == 2 && sp->atom_names()[a] == "uu" ? 2.0 : 1.0;
  });
  auto rep = lp_deflator_oracle(MarketModel{sp, s, {}});
  EXPECT_FALSE(rep.feasible);
  ASSERT_TRUE(rep.arbitrage.has_value());
  EXPECT_EQ(rep.arbitrage->t, 2);
  EXPECT_GE(rep.arbitrage->min_gain, 0.0);
  EXPECT_GT(rep.arbitrage->expected_gain, 0.0);
}

struct NaturalSetup {
  NaturalModelSpec<D> spec = testing::separated_binomial_spec<D>(4);
  EnlargedFiltration<D> g = progressive_enlarge(construct_tau_proportional(spec).extension);
  AdaptedProcess<D> n = indicator_driver(spec.space());
  DriftFactors<D> f = fit_drift_factors(g, n, components(n), 1e-12);
};

TEST(Viability, ZeroFactorsGiveUnitDeflator) {
  NaturalSetup s;
  DriftFactors<D> zero{s.n, PredictableProcess<D>(s.g.space, 1), PredictableProcess<D>(s.g.space, 1), 0.0};
  auto y = build_exponential_deflator(zero, s.g);
  for (int t = 0; t <= 4; ++t)
    for (int c = 0; c < s.g.space->num_cells(t); ++c) EXPECT_EQ(y.y.at(t, c), 1.0);
  auto cond = fullviability_conditions(zero, s.g);
  EXPECT_EQ(cond.ratio_term_max, 0.0);
  EXPECT_EQ(cond.ratio_term_mean, 0.0);
}

TEST(Viability, NaturalDeflatorDeflatesLiftedMartingales) {
  NaturalSetup s;
  EXPECT_LT(s.f.max_residual, 1e-12);
  auto y = build_exponential_deflator(s.f, s.g);
  EXPECT_EQ(y.nonpositive_nodes, 0);
  auto x = shifted(testing::walk(s.spec.space()), 10.0);
  EXPECT_TRUE(deflator_check(y, MarketModel{s.g.space, s.g.lift(x), {}}, 1e-10).pass);
  // Without the deflator the lifted walk has drift under G.
  DeflatorCandidate one{AdaptedProcess<D>(s.g.space, 1), DeflatorSource::kUser, 0, 1.0};
  for (int t = 0; t <= 4; ++t)
    for (int c = 0; c < s.g.space->num_cells(t); ++c) one.y.at(t, c) = 1.0;
  EXPECT_FALSE(deflator_check(one, MarketModel{s.g.space, s.g.lift(x), {}}, 1e-10).pass);
  auto cond = fullviability_conditions(s.f, s.g);
  EXPECT_EQ(cond.zero_division_nodes, 0);
  EXPECT_TRUE(std::isfinite(cond.ratio_term_max));
  EXPECT_GT(cond.ratio_term_max, 0.0);
}

TEST(Viability, ZeroDivisionFlagged) {
  NaturalSetup s;
  DriftFactors<D> bad = s.f;
  // Scale phi at one move node so that 1 + phi dN hits 0 on a child.
  const int t = 2;
  for (int c = 0; c < s.g.space->num_cells(t - 1); ++c) {
    const int k = s.g.space->children(t - 1, c).front();
    const D dn = s.n.increment(t, s.g.base_cell[t][k]);
    if (dn == 0.0) continue;
    bad.phi.at(t, c) = -1.0 / dn;
    break;
  }
  EXPECT_GT(fullviability_conditions(bad, s.g).zero_division_nodes, 0);
  EXPECT_GT(build_exponential_deflator(bad, s.g).nonpositive_nodes, 0);
}

TEST(Viability, RecursionBaseCase) {
  auto spec = testing::separated_binomial_spec<D>(4);
  auto rec = recursive_factors({spec}, testing::walk(spec.space()));
  ASSERT_EQ(rec.levels.size(), 1u);
  EXPECT_EQ(rec.levels[0].gamma.dim(), 0);
  EXPECT_LT(rec.levels[0].verification_residual, 1e-12);
  EXPECT_FALSE(rec.levels[0].mismatch);
}

TEST(Viability, RecursionTwoLevelsOnBinomial) {
  auto a = testing::separated_binomial_spec<D>(4);
  auto b = testing::separated_binomial_spec<D>(4);
  for (int t = 1; t <= 4; ++t)
    for (int c = 0; c < b.space()->num_cells(t - 1); ++c) b.decay.at(t, c) = t % 2 == 1 ? 0.75 : 1.0;
  auto rec = recursive_factors({a, b}, testing::walk(a.space()));
  ASSERT_EQ(rec.levels.size(), 2u);
  EXPECT_LT(rec.levels[1].gamma_residual, 1e-12);
  EXPECT_LT(rec.levels[1].verification_residual, 1e-10);
}

TEST(Viability, TransmissionWithoutDefaultsIsBaseFeasibility) {
  auto sp = binomial_space<D>(3, 0.5);
  auto rep = transmission_check(MarketModel{sp, binomial_asset(sp, 0.1, 0.2), {}}, {}, {});
  EXPECT_TRUE(rep.verdict);
  ASSERT_EQ(rep.levels.size(), 1u);
}

TEST(Viability, TransmissionStopsOnBaseArbitrage) {
  auto sp = binomial_space<D>(3, 0.5);
  auto rep = transmission_check(MarketModel{sp, binomial_asset(sp, 0.3, 0.2), {}},
                                {construct_tau_proportional(testing::separated_binomial_spec<D>(3)).extension}, {});
  EXPECT_FALSE(rep.verdict);
  EXPECT_TRUE(rep.stopped_at_base);
  EXPECT_EQ(rep.levels.size(), 1u);
}

TEST(Viability, TransmissionThroughTwoDefaults) {
  auto spec = testing::separated_binomial_spec<D>(4);
  auto sp = spec.space();
  auto other = spec;
  for (int t = 1; t <= 4; ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) other.decay.at(t, c) = t % 2 == 1 ? 0.6 : 1.0;
  auto rep = transmission_check(MarketModel{sp, binomial_asset(sp, 0.1, 0.2), {}},
                                {construct_tau_proportional(spec).extension,
                                 construct_tau_proportional(other).extension},
                                {});
  EXPECT_TRUE(rep.verdict);
  ASSERT_EQ(rep.levels.size(), 3u);
  for (const auto& lvl : rep.levels) {
    EXPECT_TRUE(lvl.lp.feasible);
    EXPECT_TRUE(lvl.composed_check.pass) << "level " << lvl.level;
  }
}

TEST(Viability, DeterministicAssetHasDeterministicHonestTime) {
  auto sp = binomial_space<D>(3, 0.5);
  auto s = adapted_from_atoms<D>(sp, 1, [](int, int, int) { return 1.0; });
  auto rep = honest_time_control(MarketModel{sp, s, {}});
  EXPECT_TRUE(rep.tau_deterministic);
  EXPECT_TRUE(rep.feasible_full);
  EXPECT_TRUE(rep.feasible_up_to_tau);
}

TEST(Viability, HonestTimeOnTradedAssetForcesLastStep) {
  auto sp = binomial_space<D>(3, 0.5);
  auto rep = honest_time_control(MarketModel{sp, binomial_asset(sp, -0.02, 0.1), {}});
  EXPECT_FALSE(rep.feasible_up_to_tau);
  EXPECT_FALSE(rep.feasible_full);
}

TEST(Viability, HonestTimeLosesViabilityBeyond) {
  auto sp = binomial_space<D>(3, 0.5);
  // S trades only on the first step; tau is the last maximum of X.
  auto x = binomial_asset(sp, -0.02, 0.1);
  auto s = adapted_from_atoms<D>(sp, 1, [&](int t, int a, int) { return x.on_atom(std::min(t, 1), a); });
  auto rep = honest_time_control(MarketModel{sp, s, {}}, x);
  EXPECT_FALSE(rep.tau_deterministic);
  EXPECT_TRUE(rep.feasible_up_to_tau);
  EXPECT_FALSE(rep.feasible_full);
  EXPECT_TRUE(rep.witness.has_value());
}

}  // namespace
}  // namespace enlarge
