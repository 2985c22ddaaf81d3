#include "enlarge/natural_model.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace enlarge {
namespace {

using Q = Rational;

TEST(NaturalModel, CoxMassesAreHazardDifferences) {
  std::mt19937_64 rng(3);
  auto sp = testing::random_tree<Q>(rng, 3, 3);
  NaturalModelSpec<Q> spec{AdaptedProcess<Q>(sp, 1), PredictableProcess<Q>(sp, 1), std::nullopt, std::nullopt};
  std::uniform_int_distribution<int> k(1, 9);
  for (int t = 0; t <= 3; ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) spec.l.at(t, c) = Q(1);
  for (int t = 1; t <= 3; ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) spec.decay.at(t, c) = Q(k(rng), 10);
  auto m = proportional_masses(spec);
  for (int c = 0; c < sp->num_cells(3); ++c) {
    Q surv = Q(1);
    int cell = c;
    std::vector<Q> d(4);
    for (int t = 3; t >= 1; --t) {
      cell = sp->parent(t, cell);
      d[t] = spec.decay.at(t, cell);
    }
    EXPECT_EQ(m.q[3][c][0], Q(0));
    for (int u = 1; u <= 3; ++u) {
      EXPECT_EQ(m.q[3][c][u], surv - surv * d[u]);
      surv *= d[u];
    }
  }
}

TEST(NaturalModel, OneStepMassIsOneMinusZ) {
  auto sp = binomial_space<Q>(1, Q(1, 2));
  NaturalModelSpec<Q> spec{AdaptedProcess<Q>(sp, 1), PredictableProcess<Q>(sp, 1), std::nullopt, std::nullopt};
  spec.l.at(0, 0) = Q(1);
  spec.l.at(1, 0) = Q(5, 4);
  spec.l.at(1, 1) = Q(3, 4);
  spec.decay.at(1, 0) = Q(1, 2);
  auto m = proportional_masses(spec);
  for (int c = 0; c < 2; ++c) EXPECT_EQ(m.q[1][c][1], Q(1) - m.z.at(1, c));
}

TEST(NaturalModel, ZAboveOneIsInvalid) {
  auto sp = binomial_space<Q>(1, Q(1, 2));
  NaturalModelSpec<Q> spec{AdaptedProcess<Q>(sp, 1), PredictableProcess<Q>(sp, 1), std::nullopt, std::nullopt};
  spec.l.at(0, 0) = Q(1);
  spec.l.at(1, 0) = Q(3, 2);
  spec.l.at(1, 1) = Q(1, 2);
  spec.decay.at(1, 0) = Q(1);
  try {
    proportional_masses(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidZ);
  }
}

TEST(NaturalModel, ConstructionReproducesZ) {
  for (int depth = 1; depth <= 5; ++depth) {
    auto spec = testing::separated_binomial_spec<Q>(depth);
    EXPECT_TRUE(spec.separated());
    auto built = construct_tau_proportional(spec);
    auto z = azema(built.extension).z;
    auto expect = spec.z();
    const auto& sp = spec.space();
    for (int t = 0; t <= depth; ++t)
      for (int c = 0; c < sp->num_cells(t); ++c) {
        EXPECT_EQ(z.at(t, c), expect.at(t, c));
        Q total = built.masses.z.at(t, c);
        for (const Q& q : built.masses.q[t][c]) {
          EXPECT_GE(q, Q(0));
          total += q;
        }
        EXPECT_EQ(total, Q(1));
      }
  }
}

TEST(NaturalModel, InterceptIsPositive) {
  auto sp = binomial_space<Q>(2, Q(1, 2));
  EXPECT_EQ(intercept_check(deterministic_time(sp, 1), {std::vector<int>(4, 1)}).max, 1.0);
  auto built = construct_tau_proportional(testing::separated_binomial_spec<Q>(3));
  auto rep = intercept_check(built.extension, {std::vector<int>(8, 1), std::vector<int>(8, 3)});
  ASSERT_EQ(rep.coincidence.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.coincidence[0], 0.5);
  EXPECT_GT(rep.coincidence[1], 0.0);
}

TEST(NaturalModel, NeverTimeHasNoPostDefaultNodes) {
  auto spec = testing::separated_binomial_spec<Q>(2);
  RandomTimeExtension<Q> ext{spec.space(), 1, {}, {}};
  ext.weights.assign(4, {Q(1)});
  ext.tau.assign(4, {kNever});
  auto rep = dies_template_check(ext, spec, {testing::walk(spec.space())});
  EXPECT_EQ(rep.post_nodes, 0);
}

TEST(NaturalModel, DoubleModeAgreesWithExact) {
  auto exact = testing::separated_binomial_spec<Q>(4);
  auto approx = testing::separated_binomial_spec<double>(4);
  auto mq = proportional_masses(exact);
  auto md = proportional_masses(approx);
  for (int c = 0; c < exact.space()->num_cells(4); ++c)
    for (int u = 0; u <= 4; ++u) EXPECT_NEAR(to_double(mq.q[4][c][u]), md.q[4][c][u], 1e-15);
}

}  // namespace
}  // namespace enlarge
