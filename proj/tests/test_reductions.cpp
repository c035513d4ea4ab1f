#include "support.hpp"

#include "refinet/errors.hpp"
#include "refinet/gallery.hpp"
#include "refinet/reductions.hpp"

#include <gtest/gtest.h>

using namespace refinet;
using namespace testing_support;

namespace {

auto scalar_op(int M, std::vector<double> a) -> RefinementOp {
  std::vector<MaskEntry> mask;
  for (std::size_t j = 0; j < a.size(); ++j) mask.push_back({static_cast<int>(j), Mat::Constant(1, 1, a[j])});
  return RefinementOp{M, 1, 1, std::move(mask)};
}

// W_{n-1}...W_0 gamma at t, straight from the recursion; compact curves only.
auto pointwise_stage(const RefinementOp& op, const CpwlCurve& gamma, const std::vector<CpwlCurve>& Bs, int n,
                     double t) -> Vec {
  if (n == 0) return gamma(t);
  Vec acc = Bs[static_cast<std::size_t>(n - 1)](t);
  for (const auto& e : op.mask()) {
    const double s = op.M() * t - e.j;
    if (s <= 0.0 || s >= op.L()) continue;
    acc += e.A * pointwise_stage(op, gamma, Bs, n - 1, s);
  }
  return acc;
}

// W^n gamma at t for eventually constant curves: no support shortcut.
auto pointwise_affine(const RefinementOp& op, const CpwlCurve& B, const CpwlCurve& gamma, int n, double t) -> Vec {
  if (n == 0) return gamma(t);
  Vec acc = B(t);
  for (const auto& e : op.mask()) acc += e.A * pointwise_affine(op, B, gamma, n - 1, op.M() * t - e.j);
  return acc;
}

}  // namespace

TEST(ForcingSchedule, ExplicitAndConstant) {
  auto g = rng(61);
  std::vector<CpwlCurve> Bs{random_curve(g, 1, 1), random_curve(g, 1, 1)};
  const auto s = ForcingSchedule::explicit_list(Bs);
  EXPECT_EQ(s.length(), 2);
  EXPECT_EQ(s.at(1)(0.5), Bs[1](0.5));
  EXPECT_TRUE(s.at(2).is_zero());
  EXPECT_THROW(expand_stage_iterate(scalar_op(2, {0.5, 0.5}), Bs[0], s, 3), precondition_error);
  const auto c = ForcingSchedule::constant(Bs[0]);
  EXPECT_FALSE(c.length().has_value());
  EXPECT_EQ(c.at(40)(0.3), Bs[0](0.3));
  EXPECT_TRUE(ForcingSchedule::none(1, 1).at(3).is_zero());
}

TEST(ForcingSchedule, Templates) {
  auto g = rng(62);
  const auto B0 = random_curve(g, 2, 1);
  const auto B1 = random_curve(g, 2, 1);
  const auto s = ForcingSchedule::geometric_templates({B0, B1}, 0.5);
  EXPECT_EQ(s.lambda(3, 0), 1.0);
  EXPECT_EQ(s.lambda(3, 1), 0.125);
  for (double t : linspace(0.0, 1.0, 51)) EXPECT_LT((s.at(2)(t) - (B0(t) + 0.25 * B1(t))).norm(), 1e-15);
  EXPECT_THROW(ForcingSchedule::tabulated_templates({B0, B1}, {{1.0, 0.5}, {0.9, 0.25}}), structural_error);
  const auto tab = ForcingSchedule::tabulated_templates({B0, B1}, {{1.0, 0.5}, {1.0, 0.25}});
  EXPECT_EQ(tab.length(), 2);
}

TEST(ExpandStageIterate, OneStageAndZeroForcing) {
  auto g = rng(63);
  const auto op = random_op(g, 2, 1, 1);
  const auto gamma = random_curve(g, 1, 1);
  const auto B = random_curve(g, 1, 1);
  const auto jobs = expand_stage_iterate(op, gamma, ForcingSchedule::explicit_list({B}), 1);
  ASSERT_EQ(jobs.size(), 2u);
  EXPECT_EQ(jobs[0].power, 1);
  EXPECT_EQ(jobs[1].power, 0);
  EXPECT_EQ(jobs[1].stage, 0);
  const auto zero = expand_stage_iterate(op, gamma, ForcingSchedule::none(1, 1), 5);
  ASSERT_EQ(zero.size(), 1u);
  EXPECT_EQ(zero[0].power, 5);
}

TEST(ExpandStageIterate, RejectsShortScheduleAndBadSupport) {
  const auto op = scalar_op(2, {0.5, 0.5});
  const CpwlCurve gamma{{hat(0.25, 0.5, 0.75)}, 1};
  EXPECT_THROW(expand_stage_iterate(op, gamma, ForcingSchedule::explicit_list({gamma}), 2), precondition_error);
  EXPECT_THROW(
      expand_stage_iterate(op, gamma, ForcingSchedule::constant(CpwlCurve{{hat(0.5, 1.0, 1.5)}, 1}), 1),
      precondition_error);
}

TEST(ExpandStageIterate, JobSumMatchesDirectIteration) {
  auto g = rng(64);
  for (auto [M, p, L] : std::vector<std::tuple<int, int, int>>{{2, 1, 1}, {3, 2, 1}, {2, 2, 2}}) {
    const auto op = random_op(g, M, p, L);
    const auto gamma = random_curve(g, p, L);
    std::vector<CpwlCurve> Bs;
    for (int r = 0; r < 4; ++r) Bs.push_back(random_curve(g, p, L, 3));
    const auto sched = ForcingSchedule::explicit_list(Bs);
    const auto sum = job_sum_oracle(op, expand_stage_iterate(op, gamma, sched, 4));
    const auto direct = direct_stage_iterate(op, gamma, sched, 4);
    for (double t : linspace(-0.2, L + 0.2, 1000)) {
      ASSERT_LT((sum(t) - direct(t)).cwiseAbs().maxCoeff(), 1e-10);
      ASSERT_LT((sum(t) - pointwise_stage(op, gamma, Bs, 4, t)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(CompileAffine, ZeroForcingMatchesHomogeneous) {
  auto g = rng(65);
  const auto op = random_op(g, 2, 1, 1);
  const auto gamma = random_curve(g, 1, 1);
  const auto a = compile_affine(op, gamma, ForcingSchedule::explicit_list({CpwlCurve::zero(1, 1)}), 1);
  const auto h = compile_homogeneous(op, gamma, 1);
  EXPECT_EQ(a.builder, "affine");
  for (double t : linspace(-0.25, 1.25, 500)) EXPECT_NEAR(a.net.eval_scalar(t)[0], h.net.eval_scalar(t)[0], 1e-12);
}

TEST(CompileAffine, ConstantForcingMatchesDirect) {
  auto g = rng(66);
  for (auto [M, p, L] : std::vector<std::tuple<int, int, int>>{{2, 1, 1}, {3, 2, 1}, {2, 2, 2}}) {
    const auto op = random_op(g, M, p, L);
    const auto gamma = random_curve(g, p, L, 3);
    const auto B = random_curve(g, p, L, 3);
    const auto sched = ForcingSchedule::constant(B);
    const auto net = compile_affine(op, gamma, sched, 3).net;
    const auto direct = direct_stage_iterate(op, gamma, sched, 3);
    const double scale = std::max(1.0, direct.max_abs());
    for (double t : linspace(-0.25, L + 0.25, 600))
      ASSERT_LE((net.eval_scalar(t) - direct(t)).cwiseAbs().maxCoeff(), 1e-9 * scale)
          << "M=" << M << " p=" << p << " L=" << L << " t=" << t;
  }
}

TEST(CompileAffine, DepthQuadraticWidthConstant) {
  const auto op = scalar_op(2, {0.75, 0.75});
  const CpwlCurve gamma{{hat(0.25, 0.5, 0.75)}, 1};
  const auto sched = ForcingSchedule::constant(CpwlCurve{{scaled(hat(0.25, 0.5, 0.75), 0.5)}, 1});
  std::vector<int> depth, width;
  for (int n = 2; n <= 6; ++n) {
    const auto r = compile_affine(op, gamma, sched, n);
    depth.push_back(r.stats.depth);
    width.push_back(r.stats.width);
  }
  const int d2 = depth[2] - 2 * depth[1] + depth[0];
  EXPECT_GT(d2, 0);
  for (std::size_t i = 2; i < depth.size(); ++i) EXPECT_EQ(depth[i] - 2 * depth[i - 1] + depth[i - 2], d2);
  for (int w : width) EXPECT_EQ(w, width.front());
}

TEST(AnchorMismatch, IdentitySumIsAlwaysCompact) {
  auto g = rng(67);
  // S = A_0 + A_1 = I
  Mat A0 = random_matrix(g, 2, 0.5);
  const RefinementOp op{2, 2, 1, {{0, A0}, {1, Mat::Identity(2, 2) - A0}}};
  Vec lo(2), hi(2);
  lo << 0.3, -1.0;
  hi << 2.0, 0.5;
  for (int trial = 0; trial < 5; ++trial) {
    const auto bump = random_curve(g, 2, 1);
    const CpwlCurve Gamma = polyline_curve({0.0, 1.0}, {lo, hi}, 1) + bump;
    const auto m = anchor_mismatch(op, random_curve(g, 2, 1), Gamma);
    EXPECT_TRUE(m.compact);
    EXPECT_TRUE(m.E.is_compact());
  }
}

TEST(AnchorMismatch, KochStraightAnchor) {
  const auto op = polygonal_generator(koch_spec());
  const auto Gamma = straight_anchor(2);
  const auto m = anchor_mismatch(op, CpwlCurve::zero(2, 1), Gamma);
  ASSERT_TRUE(m.compact);
  const auto stage1 = polygonal_oracle(op, 1);
  for (double t : linspace(-0.5, 1.5, 401)) EXPECT_LT((m.E(t) - (stage1(t) - Gamma(t))).norm(), 1e-12);
  EXPECT_NEAR(m.E(0.5)[1], std::sqrt(3.0) / 6.0, 1e-12);
}

TEST(AnchorMismatch, ViolatedTailCondition) {
  const auto op = scalar_op(2, {1.0, 1.0});
  const auto m = anchor_mismatch(op, CpwlCurve::zero(1, 1), straight_anchor(1));
  EXPECT_FALSE(m.compact);
  EXPECT_NEAR(m.E(5.0)[0], 1.0, 1e-12);
  EXPECT_THROW(compile_anchored(op, CpwlCurve::zero(1, 1), straight_anchor(1), CpwlCurve::zero(1, 1), 1),
               precondition_error);
}

TEST(CompileAnchored, FixedPointAnchor) {
  // A_0 = A_1 = I/2 fixes the straight anchor
  const RefinementOp op{2, 1, 1, {{0, Mat::Constant(1, 1, 0.5)}, {1, Mat::Constant(1, 1, 0.5)}}};
  const auto Gamma = straight_anchor(1);
  const auto m = anchor_mismatch(op, CpwlCurve::zero(1, 1), Gamma);
  ASSERT_TRUE(m.compact);
  EXPECT_LT(m.E.max_abs(), 1e-12);
  const auto r = compile_anchored(op, CpwlCurve::zero(1, 1), Gamma, CpwlCurve::zero(1, 1), 3);
  for (double t : linspace(-1.0, 2.0, 301)) EXPECT_NEAR(r.full.net.eval_scalar(t)[0], Gamma(t)[0], 1e-12);
}

TEST(CompileAnchored, KochStageTwoPolyline) {
  const auto inst = anchored_instance(polygonal_generator(koch_spec()));
  const auto r = compile_anchored(inst.op, inst.B, inst.Gamma, inst.eta, 2);
  const auto geom = polygonal_oracle(inst.op, 2);
  for (int k = 0; k <= 16; ++k) {
    const double t = k / 16.0;
    EXPECT_LT((r.full.net.eval_scalar(t) - geom(t)).norm(), 1e-12) << k;
  }
  EXPECT_EQ(r.full.builder, "anchored");
}

TEST(CompileAnchored, RandomDefectMatchesDirectIteration) {
  auto g = rng(68);
  const auto op = polygonal_generator(levy_spec());
  const auto Gamma = straight_anchor(2);
  const auto B = CpwlCurve::zero(2, 1);
  for (int trial = 0; trial < 3; ++trial) {
    const auto eta = random_curve(g, 2, 1, 3);
    const auto r = compile_anchored(op, B, Gamma, eta, 3);
    const auto direct = anchored_oracle(op, B, Gamma, eta, 3);
    for (double t : linspace(-0.5, 1.5, 500)) {
      const Vec want = pointwise_affine(op, B, Gamma + eta, 3, t);
      ASSERT_LT((direct(t) - want).cwiseAbs().maxCoeff(), 1e-12);
      ASSERT_LT((r.full.net.eval_scalar(t) - want).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(FiniteState, SingleStateIsIdentityEmbedding) {
  auto g = rng(69);
  const auto op = random_op(g, 3, 2, 1);
  std::vector<StateMaskEntry> mask;
  for (const auto& e : op.mask()) mask.push_back({0, 0, e.j, e.A});
  const FiniteStateSystem sys{3, 2, 1, 1, mask};
  const auto st = stack(sys);
  EXPECT_EQ(st.op.p(), 2);
  for (const auto& e : op.mask()) EXPECT_EQ(st.op.A(e.j), e.A);
  const auto c = random_curve(g, 2, 1);
  const auto v = apply_v(op, c);
  const auto s = sys.apply({c})[0];
  for (double t : linspace(-0.2, 1.2, 300)) EXPECT_LT((v(t) - s(t)).norm(), 1e-12);
}

TEST(FiniteState, DeterministicBlocks) {
  const auto sys = gosper_system();
  EXPECT_EQ(sys.r(), 2);
  EXPECT_EQ(sys.M(), 7);
  const auto st = stack(sys);
  EXPECT_EQ(st.op.p(), 4);
  for (int a = 0; a < 2; ++a)
    for (int j = 0; j < 7; ++j) {
      int nonzero = 0;
      for (int b = 0; b < 2; ++b)
        if (!st.op.A(j).block(2 * a, 2 * b, 2, 2).isZero(0.0)) ++nonzero;
      EXPECT_EQ(nonzero, 1) << "a=" << a << " j=" << j;
    }
}

TEST(FiniteState, StackCommutesWithIteration) {
  const auto sys = gosper_system();
  const auto st = stack(sys);
  auto g = rng(70);
  std::vector<CpwlCurve> states{random_curve(g, 2, 1, 3), random_curve(g, 2, 1, 3)};
  auto stacked = stack_curves(states);
  for (int n = 1; n <= 3; ++n) {
    states = sys.apply(states);
    stacked = apply_v(st.op, stacked);
    const auto restacked = stack_curves(states);
    for (double t : linspace(-0.1, 1.1, 1000)) ASSERT_LT((restacked(t) - stacked(t)).cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto back = unstack_curve(stacked, 2);
  ASSERT_EQ(back.size(), 2u);
  for (double t : linspace(0.0, 1.0, 100)) EXPECT_LT((back[1](t) - states[1](t)).norm(), 1e-12);
}

TEST(FiniteState, RejectsBadData) {
  EXPECT_THROW(FiniteStateSystem(2, 1, 2, 1, {{0, 2, 0, Mat::Ones(1, 1)}}), structural_error);
  EXPECT_THROW(FiniteStateSystem(2, 1, 1, 1, {{0, 0, 2, Mat::Ones(1, 1)}}), structural_error);
  EXPECT_THROW(FiniteStateSystem::deterministic(2, 1, 1, {{0, 1}}, {{Mat::Ones(1, 1), Mat::Ones(1, 1)}}),
               structural_error);
}
