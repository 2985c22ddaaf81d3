#include "enlarge/natural_model.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>

namespace enlarge {
namespace {

using Q = Rational;
using testing::separated_binomial_spec;

RandomTimeExtension<Q> never(const SpacePtr<Q>& sp) {
  RandomTimeExtension<Q> ext{sp, 1, {}, {}};
  ext.weights.assign(sp->num_atoms(), {Q(1)});
  ext.tau.assign(sp->num_atoms(), {kNever});
  return ext;
}

// Cox time from L = 1 and the given decay.
NaturalModelSpec<Q> cox_spec(const SpacePtr<Q>& sp, const Q& d) {
  NaturalModelSpec<Q> spec{AdaptedProcess<Q>(sp, 1), PredictableProcess<Q>(sp, 1), std::nullopt, std::nullopt};
  for (int t = 0; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) spec.l.at(t, c) = Q(1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) spec.decay.at(t, c) = d;
  return spec;
}

TEST(Enlargement, NeverTimeKeepsCells) {
  auto sp = binomial_space<Q>(3, Q(1, 2));
  auto g = progressive_enlarge(never(sp));
  for (int t = 0; t <= 3; ++t) EXPECT_EQ(g.space->num_cells(t), sp->num_cells(t));
  auto z = azema(never(sp)).z;
  for (int t = 0; t <= 3; ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) EXPECT_EQ(z.at(t, c), Q(1));
  auto gam = drift(testing::walk(sp), g, 0.0);
  for (int t = 1; t <= 3; ++t)
    for (int c = 0; c < g.space->num_cells(t - 1); ++c) EXPECT_EQ(gam.at(t, c), Q(0));
}

TEST(Enlargement, DeterministicTimeKeepsCellCount) {
  auto sp = binomial_space<Q>(3, Q(1, 2));
  auto g = progressive_enlarge(deterministic_time(sp, 1));
  for (int t = 0; t <= 3; ++t) EXPECT_EQ(g.space->num_cells(t), sp->num_cells(t));
}

TEST(Enlargement, CellCountsMatchPartitionCrossing) {
  auto sp = binomial_space<Q>(2, Q(1, 2));
  RandomTimeExtension<Q> ext{sp, 2, {}, {}};
  for (int a = 0; a < sp->num_atoms(); ++a) {
    ext.weights.push_back({Q(1, 2), Q(1, 2)});
    ext.tau.push_back({sp->atom_names()[a][0] == 'u' ? 1 : 2, kNever});
  }
  auto g = progressive_enlarge(ext);
  const std::vector<int> expected{1, 3, 8};
  for (int t = 0; t <= 2; ++t) {
    std::set<std::pair<int, int>> keys;
    for (int a = 0; a < sp->num_atoms(); ++a)
      for (int l = 0; l < 2; ++l) keys.insert({sp->cell_of(t, a), ext.tau[a][l] <= t ? ext.tau[a][l] : -1});
    EXPECT_EQ(g.space->num_cells(t), static_cast<int>(keys.size()));
    EXPECT_EQ(g.space->num_cells(t), expected[t]);
  }
  EXPECT_EQ(g.space->num_atoms(), 8);
}

TEST(Enlargement, CoxAzemaIsPowerOfHalf) {
  auto sp = binomial_space<Q>(3, Q(1, 2));
  auto built = construct_tau_proportional(cox_spec(sp, Q(1, 2)));
  auto z = azema(built.extension).z;
  for (int t = 0; t <= 3; ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) EXPECT_EQ(z.at(t, c), Q(1, 1 << t));
}

TEST(Enlargement, CoxIsImmersion) {
  auto sp = binomial_space<Q>(3, Q(1, 3));
  auto built = construct_tau_proportional(cox_spec(sp, Q(2, 3)));
  auto g = progressive_enlarge(built.extension);
  std::mt19937_64 rng(7);
  auto x = testing::random_martingale<Q>(rng, sp);
  auto gam = drift(x, g, 0.0);
  for (int t = 1; t <= 3; ++t)
    for (int c = 0; c < g.space->num_cells(t - 1); ++c) EXPECT_EQ(gam.at(t, c), Q(0));
  auto f = fit_drift_factors(g, indicator_driver(sp), components(indicator_driver(sp)), 0.0);
  EXPECT_EQ(f.max_residual, 0.0);
}

TEST(Enlargement, PreDefaultDriftMatchesTemplate) {
  auto spec = separated_binomial_spec<Q>(4);
  auto built = construct_tau_proportional(spec);
  auto g = progressive_enlarge(built.extension);
  auto m = doob_decompose(built.masses.z).martingale;
  auto x = testing::walk(spec.space());
  auto gam = increments(drift(x, g, 0.0));
  auto br = pred_bracket_steps(m, x);
  int checked = 0;
  for (int t = 1; t <= 4; ++t)
    for (int c = 0; c < g.space->num_cells(t - 1); ++c) {
      if (!g.alive(t - 1, c)) continue;
      const int bc = g.base_cell[t - 1][c];
      EXPECT_EQ(gam.at(t, c), br.at(t, bc) / built.masses.z.at(t - 1, bc));
      ++checked;
    }
  EXPECT_GT(checked, 0);
  auto rep = dies_template_check(built.extension, spec, {x});
  EXPECT_EQ(rep.pre_residual, 0.0);
  EXPECT_EQ(rep.post_residual, 0.0);
  EXPECT_GT(rep.post_nodes, 0);
}

TEST(Enlargement, SingleFactorIsInverseZ) {
  auto spec = separated_binomial_spec<Q>(4);
  auto built = construct_tau_proportional(spec);
  auto g = progressive_enlarge(built.extension);
  auto m = doob_decompose(built.masses.z).martingale;
  auto x = testing::walk(spec.space());
  auto f = fit_drift_factors(g, m, {x}, 0.0);
  EXPECT_EQ(f.max_residual, 0.0);
  for (int t = 2; t <= 4; t += 2)
    for (int c = 0; c < g.space->num_cells(t - 1); ++c) {
      if (!g.alive(t - 1, c)) continue;
      const int bc = g.base_cell[t - 1][c];
      EXPECT_EQ(f.phi.at(t, c), Q(1) / built.masses.z.at(t - 1, bc));
    }
}

TEST(Enlargement, ZeroBracketFactorIsInfeasible) {
  auto spec = separated_binomial_spec<Q>(2);
  auto g = progressive_enlarge(construct_tau_proportional(spec).extension);
  AdaptedProcess<Q> n(spec.space(), 1);
  EXPECT_THROW(
      {
        try {
          fit_drift_factors(g, n, {testing::walk(spec.space())}, 0.0);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
          throw;
        }
      },
      Error);
}

TEST(Enlargement, CompensatorTransform) {
  auto spec = separated_binomial_spec<Q>(4);
  auto sp = spec.space();
  auto g = progressive_enlarge(construct_tau_proportional(spec).extension);
  auto n = indicator_driver(sp);
  auto f = fit_drift_factors(g, n, components(n), 0.0);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5; ++i) {
    auto a = testing::random_adapted<Q>(rng, sp);
    EXPECT_EQ(compensator_transform_check(a, f, g), 0.0);
    auto pa = as_adapted(cumulate(testing::random_predictable<Q>(rng, sp)));
    EXPECT_EQ(compensator_transform_check(pa, f, g), 0.0);
  }
  auto cox = progressive_enlarge(construct_tau_proportional(cox_spec(sp, Q(3, 4))).extension);
  auto fc = fit_drift_factors(cox, n, components(n), 0.0);
  EXPECT_EQ(compensator_transform_check(testing::random_adapted<Q>(rng, sp), fc, cox), 0.0);
}

TEST(Enlargement, OneFinHoldsForPastMeasurable) {
  auto sp = binomial_space<Q>(2, Q(1, 2));
  RandomTimeExtension<Q> ext{sp, 1, {}, {}};
  for (int a = 0; a < sp->num_atoms(); ++a) {
    ext.weights.push_back({Q(1)});
    ext.tau.push_back({sp->atom_names()[a] == "uu" ? 1 : kNever});
  }
  auto g = progressive_enlarge(ext);
  StoppedTest<Q> past{std::vector<int>(4, 2), {}};
  for (int a = 0; a < 4; ++a) past.xi.push_back(sp->atom_names()[a][0] == 'u' ? Q(1) : Q(0));
  EXPECT_TRUE(condition_1fin_check(g, {past}).pass);
  EXPECT_TRUE(condition_1fin_check(progressive_enlarge(never(sp)), {past}).pass);
}

TEST(Enlargement, OneFinCounterexample) {
  auto sp = binomial_space<Q>(2, Q(1, 2));
  RandomTimeExtension<Q> ext{sp, 1, {}, {}};
  for (int a = 0; a < sp->num_atoms(); ++a) {
    ext.weights.push_back({Q(1)});
    ext.tau.push_back({sp->atom_names()[a] == "uu" ? 1 : kNever});
  }
  auto g = progressive_enlarge(ext);
  StoppedTest<Q> test{std::vector<int>(4, 2), {}};
  for (int a = 0; a < 4; ++a) test.xi.push_back(sp->atom_names()[a] == "ud" ? Q(1) : Q(0));
  auto rep = condition_1fin_check(g, {test});
  EXPECT_FALSE(rep.pass);
  EXPECT_TRUE(rep.inclusion_holds);
  ASSERT_FALSE(rep.counterexamples.empty());
  EXPECT_EQ(rep.counterexamples[0].t, 2);
  EXPECT_EQ(g.tau[rep.counterexamples[0].atom], 1);
}

}  // namespace
}  // namespace enlarge
