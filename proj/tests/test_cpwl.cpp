#include "support.hpp"

#include "refinet/cpwl.hpp"
#include "refinet/errors.hpp"

#include <gtest/gtest.h>

using namespace refinet;
using namespace testing_support;

TEST(ScalarCpwl, EvaluatesBreakpointsPiecesAndTails) {
  const auto h = hat(0.25, 0.5, 0.75);
  EXPECT_EQ(h(0.5), 1.0);
  EXPECT_EQ(h(0.375), 0.5);
  EXPECT_EQ(h(2.0), 0.0);
  EXPECT_EQ(h(-3.0), 0.0);
}

TEST(ScalarCpwl, RejectsMalformedBreakpoints) {
  EXPECT_THROW(ScalarCpwl({}), structural_error);
  EXPECT_THROW(ScalarCpwl({{0.5, 1.0}, {0.5, 2.0}}), structural_error);
  EXPECT_THROW(ScalarCpwl({{0.5, 1.0}, {0.2, 2.0}}), structural_error);
  EXPECT_THROW(ScalarCpwl({{0.0, std::nan("")}}), structural_error);
}

TEST(ScalarCpwl, TailsMatchEndValues) {
  const ScalarCpwl f{{{-1.0, 2.0}, {0.0, 0.0}, {3.0, -1.5}}};
  EXPECT_EQ(f.left_tail(), f(-1.0));
  EXPECT_EQ(f.right_tail(), f(3.0));
  EXPECT_EQ(f(-100.0), 2.0);
  EXPECT_EQ(f(100.0), -1.5);
}

TEST(Combine, SumOfHatWithItselfDoubles) {
  const auto h = hat(0.25, 0.5, 0.75);
  const auto s = combine(h, h, combine_op::sum);
  for (double t : linspace(-1, 2, 301)) EXPECT_DOUBLE_EQ(s(t), 2.0 * h(t));
}

TEST(Combine, MinIsIdempotent) {
  auto g = rng(1);
  const auto f = random_curve(g, 1, 1, 6).component(0);
  const auto m = combine(f, f, combine_op::min);
  for (double t : linspace(-0.5, 1.5, 1000)) EXPECT_EQ(m(t), f(t));
}

TEST(Combine, MinWithConstantAtPeak) {
  const auto m = combine(hat(0.25, 0.5, 0.75), ScalarCpwl::constant(0.5), combine_op::min);
  EXPECT_DOUBLE_EQ(m(0.5), 0.5);
  EXPECT_DOUBLE_EQ(m(0.3), 0.2);
}

TEST(Combine, MinMaxMatchPointwiseOnRandomPairs) {
  auto g = rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_curve(g, 1, 2, 5).component(0);
    const auto h = random_curve(g, 1, 2, 5).component(0);
    const auto mn = combine(f, h, combine_op::min);
    const auto mx = combine(f, h, combine_op::max);
    for (double t : linspace(-0.5, 2.5, 997)) {
      EXPECT_NEAR(mn(t), std::min(f(t), h(t)), 1e-12);
      EXPECT_NEAR(mx(t), std::max(f(t), h(t)), 1e-12);
    }
  }
}

TEST(TranslateScale, IdentityDilationShift) {
  const auto h = hat(0.25, 0.5, 0.75);
  const auto id = translate_scale(h, 0.0, 1.0);
  for (double t : linspace(-1, 2, 100)) EXPECT_EQ(id(t), h(t));
  const auto d = translate_scale(h, 0.0, 2.0);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_DOUBLE_EQ(d.points()[0].t, 0.125);
  EXPECT_DOUBLE_EQ(d.points()[1].t, 0.25);
  EXPECT_DOUBLE_EQ(d.points()[2].t, 0.375);
  const auto s = translate_scale(h, 1.0, 1.0);
  for (double t : linspace(-1, 2, 100)) EXPECT_DOUBLE_EQ(s(t + 1.0), h(t));
}

TEST(Compose, MatchesPointwiseComposition) {
  auto g = rng(3);
  const auto outer = random_curve(g, 1, 1, 5).component(0);
  const ScalarCpwl inner{{{0.0, 0.0}, {0.4, 1.0}, {1.0, 0.2}}};
  const auto c = compose(outer, inner);
  for (double t : linspace(-0.5, 1.5, 1001)) EXPECT_NEAR(c(t), outer(inner(t)), 1e-12);
}

TEST(UnitRamp, ClampsToUnitInterval) {
  const auto r = unit_ramp();
  EXPECT_EQ(r(-2.0), 0.0);
  EXPECT_EQ(r(0.3), 0.3);
  EXPECT_EQ(r(4.0), 1.0);
}

TEST(CpwlCurve, ArithmeticAndCompactness) {
  auto g = rng(4);
  const auto a = random_curve(g, 2, 2);
  const auto b = random_curve(g, 2, 2);
  const auto s = a + b;
  const auto d = a - b;
  const auto k = 2.5 * a;
  for (double t : linspace(-1, 3, 400)) {
    EXPECT_NEAR((s(t) - a(t) - b(t)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((d(t) - a(t) + b(t)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((k(t) - 2.5 * a(t)).norm(), 0.0, 1e-12);
  }
  EXPECT_TRUE(a.is_compact());
  EXPECT_FALSE(CpwlCurve({ScalarCpwl{{{0.0, 0.0}, {1.0, 1.0}}}}, 1).is_compact());
  EXPECT_TRUE(CpwlCurve::zero(3, 1).is_zero());
}

TEST(DecomposeAtomic, SingleAtomicCurveGivesOneTerm) {
  const CpwlCurve c{{scaled(hat(0.25, 0.5, 0.75), 1.7)}, 1};
  const auto terms = decompose_atomic(c, 0.25);
  ASSERT_EQ(terms.size(), 1u);
  EXPECT_EQ(terms[0].mu, 0);
  EXPECT_DOUBLE_EQ(evaluate_terms(terms, 1, 0.5)[0], 1.7);
}

TEST(DecomposeAtomic, WideTentNeedsSeveralTerms) {
  const CpwlCurve c{{hat(0.05, 0.5, 0.95)}, 1};
  EXPECT_GT(decompose_atomic(c, 0.25).size(), 1u);
}

TEST(DecomposeAtomic, ReconstructsRandomCurves) {
  auto g = rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int L = 1 + trial % 3;
    const auto c = random_curve(g, 2, L, 5);
    for (double rho : {0.1, 0.25, 0.4}) {
      const auto terms = decompose_atomic(c, rho);
      for (const auto& term : terms) {
        EXPECT_GE(term.hat.rho(), rho - 1e-15);
        EXPECT_GE(term.mu, 0);
        EXPECT_LT(term.mu, 2);
      }
      for (double t : linspace(-0.5, L + 0.5, 10000))
        ASSERT_NEAR((evaluate_terms(terms, 2, t) - c(t)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    }
  }
}

TEST(SpecialHat, RejectsInvalidProfiles) {
  EXPECT_THROW(SpecialHat(hat(0.1, 0.5, 0.9), 0.25), precondition_error);
  EXPECT_THROW(SpecialHat(scaled(hat(0.3, 0.5, 0.7), -1.0), 0.25), precondition_error);
  EXPECT_THROW(SpecialHat(hat(0.3, 0.5, 0.7), 0.6), precondition_error);
  EXPECT_NO_THROW(SpecialHat(hat(0.3, 0.5, 0.7), 0.25));
}

TEST(Polyline, HoldsEndValuesBeyondEnds) {
  Vec a(2), b(2);
  a << 0.0, 1.0;
  b << 2.0, -1.0;
  const auto c = polyline_curve({0.0, 1.0}, {a, b}, 1);
  EXPECT_EQ(c(-1.0), a);
  EXPECT_EQ(c(5.0), b);
  EXPECT_DOUBLE_EQ(c(0.5)[0], 1.0);
}

TEST(CpwlCurve, CompactnessSeesMassPastTheWindow) {
  EXPECT_FALSE(CpwlCurve({hat(0.5, 0.9, 1.5)}, 1).is_compact());
  EXPECT_FALSE(CpwlCurve({hat(-0.5, 0.1, 0.5)}, 1).is_compact());
  EXPECT_TRUE(CpwlCurve({ScalarCpwl{{{-1.0, 0.0}, {0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}, {2.0, 0.0}}}}, 1).is_compact());
}
