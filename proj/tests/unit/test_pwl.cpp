#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dpe/errors.hpp"
#include "dpe/pwl.hpp"
#include "test_support.hpp"

using dpe::PiecewiseLinearFn;
using dpe::RightConstantFn;
using dpe::testing::uniform;

TEST(RightConstantFn, EvalIsRightContinuous) {
  const RightConstantFn f({0.0, 5.0}, {3.0, 1.0});
  EXPECT_DOUBLE_EQ(f.eval(5.0), 1.0);
  EXPECT_DOUBLE_EQ(f.eval(4.999), 3.0);
  EXPECT_DOUBLE_EQ(f.eval(0.0), 3.0);
}

TEST(RightConstantFn, EvalBeforeDomainThrows) {
  const RightConstantFn f({1.0}, {2.0}, 1.0);
  EXPECT_THROW((void)f.eval(0.5), dpe::DomainError);
}

TEST(RightConstantFn, IntegrateConstantRate) {
  EXPECT_DOUBLE_EQ(RightConstantFn({0.0}, {2.0}).integrate(0.0, 3.0), 6.0);
}

TEST(RightConstantFn, IntegrateRateDropsToZero) {
  EXPECT_DOUBLE_EQ(RightConstantFn({0.0, 1.0}, {2.0, 0.0}).integrate(0.0, 3.0), 2.0);
}

TEST(RightConstantFn, IntegrateTwoSegments) {
  // 2 on [0,1) plus 3 on [1,2)
  EXPECT_DOUBLE_EQ(RightConstantFn({0.0, 1.0}, {2.0, 3.0}).integrate(0.0, 2.0), 5.0);
}

TEST(RightConstantFn, IntegrateReversedBoundsThrows) {
  EXPECT_THROW((void)RightConstantFn({0.0}, {1.0}).integrate(2.0, 1.0), dpe::PreconditionError);
}

TEST(RightConstantFn, CumulativeMatchesIntegrate) {
  std::mt19937_64 rng(3);
  std::vector<double> ts{0.0}, vs{uniform(rng, 0, 4)};
  for (int k = 1; k < 20; ++k) {
    ts.push_back(ts.back() + uniform(rng, 0.1, 2.0));
    vs.push_back(uniform(rng, 0, 4));
  }
  const RightConstantFn f(ts, vs);
  const auto F = f.cumulative();
  for (int k = 0; k < 200; ++k) {
    const double t = uniform(rng, 0.0, ts.back() + 3.0);
    EXPECT_NEAR(F.eval(t), f.integrate(0.0, t), 1e-9);
  }
}

TEST(RightConstantFn, AppendMergesEqualValues) {
  RightConstantFn f;
  f.append(0.0, 1.0);
  f.append(1.0, 1.0);
  f.append(2.0, 3.0);
  f.append(2.0, 4.0);
  EXPECT_EQ(f.times(), (std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(f.values(), (std::vector<double>{1.0, 4.0}));
}

TEST(PiecewiseLinearFn, EvalInterpolates) {
  EXPECT_DOUBLE_EQ(PiecewiseLinearFn({0.0, 2.0}, {0.0, 4.0}).eval(1.0), 2.0);
}

TEST(PiecewiseLinearFn, EvalExtrapolatesWithSlopeAfter) {
  EXPECT_DOUBLE_EQ(PiecewiseLinearFn({0.0, 2.0}, {0.0, 4.0}, 0.0, 2.0).eval(3.0), 6.0);
}

TEST(PiecewiseLinearFn, UnsortedBreakpointsThrow) {
  EXPECT_THROW(PiecewiseLinearFn({1.0, 0.0}, {0.0, 1.0}), dpe::PreconditionError);
}

TEST(PiecewiseLinearFn, IntegrateMatchesTrapezoid) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto f = dpe::testing::random_pwl(rng, 0.0, 10.0, 12, 5.0);
    const double a = uniform(rng, -1.0, 5.0), b = uniform(rng, 5.0, 12.0);
    const double oracle = dpe::testing::trapezoid([&](double t) { return f.eval(t); }, f.times(), a, b);
    EXPECT_NEAR(f.integrate(a, b), oracle, 1e-9);
  }
}

TEST(ComposeMonotone, IdentityOuterGivesInner) {
  const PiecewiseLinearFn f({0.0, 1.0, 3.0}, {1.0, 2.0, 5.0}, 0.0, 1.0);
  const auto g = dpe::compose_monotone(PiecewiseLinearFn::identity(), f);
  for (double t = -1.0; t <= 5.0; t += 0.125) EXPECT_NEAR(g.eval(t), f.eval(t), 1e-12);
}

TEST(ComposeMonotone, AffineComposition) {
  const PiecewiseLinearFn outer({0.0}, {1.0}, 1.0, 1.0);       // x + 1
  const PiecewiseLinearFn inner({0.0, 1.0}, {0.0, 2.0}, 2.0, 2.0);  // 2x
  const auto g = dpe::compose_monotone(outer, inner);
  EXPECT_DOUBLE_EQ(g.eval(0.0), 1.0);
  EXPECT_DOUBLE_EQ(g.eval(1.0), 3.0);
}

TEST(ComposeMonotone, OuterBreakpointPullsBackThroughInner) {
  const PiecewiseLinearFn outer({0.0, 3.0, 6.0}, {0.0, 3.0, 9.0}, 1.0, 2.0);
  const PiecewiseLinearFn inner({0.0, 2.0}, {0.0, 4.0}, 2.0, 2.0);
  const auto g = dpe::compose_monotone(outer, inner);
  bool has_preimage = false;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::abs(g.times()[k] - 1.5) < 1e-12) {
      has_preimage = true;
      EXPECT_NEAR(g.values()[k], outer.eval(3.0), 1e-12);
    }
  }
  EXPECT_TRUE(has_preimage);
  for (int k = 0; k <= 4000; ++k) {
    const double t = -1.0 + k * 1e-3;
    EXPECT_NEAR(g.eval(t), outer.eval(inner.eval(t)), 1e-9) << "t=" << t;
  }
}

TEST(ComposeMonotone, DecreasingInnerThrows) {
  const PiecewiseLinearFn inner({0.0, 1.0}, {1.0, 0.0});
  EXPECT_THROW((void)dpe::compose_monotone(PiecewiseLinearFn::identity(), inner), dpe::PreconditionError);
}

TEST(ComposeMonotone, RandomDenseSampling) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    auto outer = dpe::testing::random_pwl(rng, 0.0, 20.0, 10, 10.0);
    std::vector<double> ts{0.0}, vs{uniform(rng, 0, 2)};
    for (int k = 0; k < 8; ++k) {
      ts.push_back(ts.back() + uniform(rng, 0.1, 2.0));
      vs.push_back(vs.back() + uniform(rng, 0.0, 3.0));
    }
    const PiecewiseLinearFn inner(ts, vs, 1.0, 1.0);
    const auto g = dpe::compose_monotone(outer, inner);
    for (int k = 0; k <= 1000; ++k) {
      const double t = -2.0 + k * 0.02;
      EXPECT_NEAR(g.eval(t), outer.eval(inner.eval(t)), 1e-8);
    }
  }
}

TEST(PointwiseMin, Idempotent) {
  const PiecewiseLinearFn f({0.0, 1.0, 2.0}, {0.0, 3.0, 1.0});
  const auto m = dpe::pointwise_min(f, f);
  for (double t = -1.0; t <= 3.0; t += 0.01) EXPECT_NEAR(m.eval(t), f.eval(t), 1e-12);
}

TEST(PointwiseMin, SymmetricCrossing) {
  const PiecewiseLinearFn up({0.0, 2.0}, {0.0, 2.0}, 1.0, 1.0);
  const PiecewiseLinearFn down({0.0, 2.0}, {2.0, 0.0}, -1.0, -1.0);
  const auto m = dpe::pointwise_min(up, down);
  EXPECT_DOUBLE_EQ(m.eval(1.0), 1.0);
  EXPECT_NEAR(m.slope_left_of(1.0), 1.0, 1e-12);
  EXPECT_NEAR(m.slope_right_of(1.0), -1.0, 1e-12);
}

TEST(PointwiseMin, ThreeRandomFunctionsMatchGridMin) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<PiecewiseLinearFn> fs;
    for (int k = 0; k < 3; ++k) fs.push_back(dpe::testing::random_pwl(rng, 0.0, 10.0, 15, 10.0));
    const auto m = dpe::pointwise_min(fs);
    for (int k = 0; k < 1000; ++k) {
      const double t = -1.0 + 12.0 * k / 999.0;
      const double oracle = std::min({fs[0].eval(t), fs[1].eval(t), fs[2].eval(t)});
      EXPECT_NEAR(m.eval(t), oracle, 1e-9);
    }
  }
}

TEST(PointwiseMin, NearlyParallelTailsKeepPrecision) {
  // Tails differing by one ulp in slope, and by a small amount, cross far to the left.
  const PiecewiseLinearFn f({0.75, 5.75}, {18.814122007297016, 23.814122007297016}, std::nextafter(1.0, 2.0), 1.0);
  const PiecewiseLinearFn g({0.75, 5.75}, {17.765496136162799, 22.765496136162799}, 1.0, 1.0);
  const auto m = dpe::pointwise_min(f, g);
  for (double t = 0.75; t <= 10.0; t += 0.01) EXPECT_NEAR(m.eval(t), std::min(f.eval(t), g.eval(t)), 1e-12);

  const PiecewiseLinearFn a({1.0, 6.0}, {21.0, 26.0}, 1.0, 1.0);
  const PiecewiseLinearFn b({1.0, 1.25, 1.5, 1.75, 2.0, 6.0},
                            {16.000007441843788, 16.250006992818953, 16.500000234915468, 16.750001955559771, 17.0, 21.0},
                            0.99999820390065963, 1.0);
  const auto mb = dpe::pointwise_min(a, b);
  for (double t = 1.0; t <= 10.0; t += 0.01) EXPECT_NEAR(mb.eval(t), std::min(a.eval(t), b.eval(t)), 1e-12);
}

TEST(PiecewiseLinear, DistantBreakpointKeepsAbsolutePrecision) {
  const PiecewiseLinearFn f({-2783805.2437753766, 1.25}, {-2783785.2437753766, 21.25}, 1.0, 1.0);
  EXPECT_NEAR(f.eval(1.0), 21.0, 1e-12);
  EXPECT_NEAR(f.eval(-2783805.0), -2783785.0, 1e-6);
}

TEST(PointwiseMin, EmptyListThrows) {
  EXPECT_THROW((void)dpe::pointwise_min(std::span<const PiecewiseLinearFn>{}), dpe::PreconditionError);
}

TEST(Prune, RemovesCollinearPoints) {
  const auto p = dpe::prune(PiecewiseLinearFn({0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}, 1.0, 1.0), 0.0);
  EXPECT_EQ(p.times(), (std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(p.values(), (std::vector<double>{0.0, 2.0}));
}

TEST(Prune, LosslessAtZeroEpsilon) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const auto f = dpe::testing::random_pwl(rng, 0.0, 10.0, 30, 4.0);
    const auto p = dpe::prune(f, 0.0);
    for (double t = -1.0; t <= 11.0; t += 0.003) EXPECT_NEAR(p.eval(t), f.eval(t), 1e-9);
  }
}

TEST(Prune, JitteredLineCollapsesToTwoPoints) {
  std::mt19937_64 rng(29);
  std::vector<double> ts, vs;
  for (int k = 0; k <= 200; ++k) {
    ts.push_back(0.05 * k);
    vs.push_back(2.0 * ts.back() + 1.0 + uniform(rng, -1e-9, 1e-9));
  }
  const PiecewiseLinearFn f(ts, vs, 0.0, 0.0);
  const auto p = dpe::prune(f, 1e-6);
  EXPECT_EQ(p.size(), 2u);
  for (int k = 0; k <= 100000; ++k) {
    const double t = 10.0 * k / 100000.0;
    EXPECT_LE(std::abs(p.eval(t) - f.eval(t)), 1e-6);
  }
}

TEST(Prune, NegativeEpsilonThrows) {
  EXPECT_THROW((void)dpe::prune(PiecewiseLinearFn(), -1.0), dpe::PreconditionError);
}

TEST(DipsBelow, DetectsCrossing) {
  const PiecewiseLinearFn f({0.0, 2.0}, {0.0, 2.0}, 1.0, 1.0);
  const PiecewiseLinearFn g = PiecewiseLinearFn::constant(1.0);
  EXPECT_TRUE(dpe::dips_below(f, g, 0.0));
  EXPECT_FALSE(dpe::dips_below(f, g, 1.0));
}
