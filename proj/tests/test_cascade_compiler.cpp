#include "support.hpp"

#include "refinet/cascade_compiler.hpp"
#include "refinet/errors.hpp"
#include "refinet/gallery.hpp"

#include <gtest/gtest.h>

using namespace refinet;
using namespace testing_support;

namespace {

auto scalar_op(int M, std::vector<double> a) -> RefinementOp {
  std::vector<MaskEntry> mask;
  for (std::size_t j = 0; j < a.size(); ++j) mask.push_back({static_cast<int>(j), Mat::Constant(1, 1, a[j])});
  return RefinementOp{M, 1, 1, std::move(mask)};
}

auto gadget_input(double lambda, const Vec& y) -> Vec {
  Vec x(y.size() + 1);
  x << lambda, y;
  return x;
}

auto cfg_for(int M, int n) -> LoopConfig {
  LoopConfig cfg;
  cfg.M = M;
  cfg.n = n;
  return cfg;
}

}  // namespace

TEST(ProductGadget, Examples) {
  const auto g1 = product_gadget(1.0, 2);
  Vec y(2);
  y << 0.5, -0.3;
  EXPECT_LT((g1(gadget_input(1.0, y)) - y).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(g1(gadget_input(0.0, y)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(g1(gadget_input(0.37, Vec::Zero(2))).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(g1.depth(), 2);
  EXPECT_EQ(g1.width(), 5);
  EXPECT_THROW(product_gadget(0.0, 1), precondition_error);
}

TEST(ProductGadget, ContractsOnRandomInputs) {
  auto g = rng(51);
  for (double a : {1.0, 7.5, 1e3}) {
    const int N = 3;
    const auto net = product_gadget(a, N);
    for (int i = 0; i < 10000; ++i) {
      Vec y(N);
      for (int k = 0; k < N; ++k) y[k] = uniform(g, -a, a);
      const double lambda = uniform(g, 0.0, 1.0);
      ASSERT_LE((net(gadget_input(1.0, y)) - y).cwiseAbs().maxCoeff(), 1e-12 * a);
      ASSERT_LE(net(gadget_input(0.0, y)).cwiseAbs().maxCoeff(), 1e-12 * a);
      ASSERT_LE(net(gadget_input(lambda, Vec::Zero(N))).cwiseAbs().maxCoeff(), 1e-12 * a);
    }
  }
}

TEST(GadgetBound, UsesTransposeRowSums) {
  const auto op = scalar_op(2, {0.5, 0.75});
  EXPECT_DOUBLE_EQ(gadget_bound(op, 1.0, 3), 2.0);
  const auto big = scalar_op(2, {3.0, -2.0});
  EXPECT_DOUBLE_EQ(gadget_bound(big, 0.5, 2), 9.0);
}

TEST(ScalarFactor, Examples) {
  const SpecialHat h{hat(0.3, 0.5, 0.7), 0.25};
  const auto net = scalar_factor_net(h, cfg_for(2, 1));
  const Vec out = net.eval_scalar(0.25);
  EXPECT_NEAR(out[0], 1.0, 1e-12);
  EXPECT_NEAR(out[1], 0.25, 1e-15);
  EXPECT_NEAR(net.eval_scalar(0.5)[0], 0.0, 1e-12);
  EXPECT_NEAR(net.eval_scalar(0.0)[0], 0.0, 1e-12);
  auto bad = cfg_for(2, 1);
  bad.eps = 0.2;
  bad.rho = 0.21;
  EXPECT_THROW(scalar_factor_net(SpecialHat{hat(0.3, 0.5, 0.7), 0.1}, bad), precondition_error);
}

TEST(ScalarFactor, MatchesResidualOrbit) {
  auto g = rng(52);
  for (int M : {2, 3}) {
    for (int n = 1; n <= 8; n += 1) {
      const auto h = random_special_hat(g, 0.25);
      const auto net = scalar_factor_net(h, cfg_for(M, n));
      EXPECT_EQ(net.width(), scalar_factor_net(h, cfg_for(M, 1)).width());
      for (int i = 0; i < 1000 / 8; ++i) {
        const double x = uniform(g, 0.0, 1.0);
        const double want = h(static_cast<double>(exact_residual(x, M, n)));
        ASSERT_NEAR(net.eval_scalar(x)[0], want, 1e-8) << "M=" << M << " n=" << n << " x=" << x;
      }
    }
  }
}

TEST(AtomicNet, ZeroMaskGivesZero) {
  const RefinementOp op{2, 1, 1, {}};
  const auto net = atomic_unit_interval_net(op, SpecialHat{hat(0.3, 0.5, 0.7), 0.25}, 0, cfg_for(2, 2));
  for (double x : linspace(0.0, 1.0, 11)) EXPECT_EQ(net.eval_scalar(x)[0], 0.0);
}

TEST(AtomicNet, OneStepExample) {
  const auto op = scalar_op(2, {1.0, 1.0});
  const SpecialHat h{hat(0.3, 0.5, 0.7), 0.25};
  const auto net = atomic_unit_interval_net(op, h, 0, cfg_for(2, 1));
  EXPECT_NEAR(net.eval_scalar(0.25)[0], 1.0, 1e-12);
  const CpwlCurve c{{h.base()}, 1};
  const auto v = apply_v(op, c);
  for (double x : linspace(0.0, 1.0, 401)) EXPECT_NEAR(net.eval_scalar(x)[0], v(x)[0], 1e-12);
}

TEST(AtomicNet, MatchesCascadeOnGalleryOps) {
  auto g = rng(53);
  const std::vector<std::pair<std::string, RefinementOp>> ops{
      {"koch", polygonal_generator(koch_spec())},
      {"levy", polygonal_generator(levy_spec())},
      {"hilbert_type", polygonal_generator(hilbert_type_spec())},
      {"hilbert_rp3", hilbert_rp(3)}};
  for (const auto& [name, op] : ops) {
    const int nmax = name == "levy" ? 6 : 4;
    for (int n = 1; n <= nmax; ++n) {
      const int mu = n % op.p();
      const auto h = random_special_hat(g, 0.25);
      std::vector<ScalarCpwl> cs(static_cast<std::size_t>(op.p()), ScalarCpwl::constant(0.0));
      cs[static_cast<std::size_t>(mu)] = h.base();
      const CpwlCurve c{cs, op.L()};
      const auto net = atomic_unit_interval_net(op, h, mu, cfg_for(op.M(), n));
      const double scale = std::max(1.0, std::pow(gadget_bound(op, 1.0, n), 1.0));
      for (int i = 0; i < 200; ++i) {
        const double x = uniform(g, 0.0, 1.0);
        ASSERT_LE((net.eval_scalar(x) - cascade_eval(op, c, x, n)).cwiseAbs().maxCoeff(), 1e-8 * scale)
            << name << " n=" << n << " x=" << x;
      }
    }
  }
}

TEST(Glue, RampExamples) {
  EXPECT_EQ(ramp(1, 0.5), 0.5);
  EXPECT_EQ(ramp(1, 2.0), 1.0);
  EXPECT_EQ(ramp(2, 0.5), 0.0);
  EXPECT_EQ(ramp(3, 2.25), 0.25);
}

TEST(Glue, SingleAndMultipleBlocks) {
  const auto f1 = lower_scalar_cpwl(ScalarCpwl{{{0.0, 0.0}, {0.5, 2.0}, {1.0, 1.0}}});
  const auto f2 = lower_scalar_cpwl(ScalarCpwl{{{0.0, 1.0}, {0.3, -1.0}, {1.0, 0.0}}});
  const auto one = glue_blocks({lower_scalar_cpwl(hat(0.0, 0.5, 1.0))});
  EXPECT_EQ(one.eval_scalar(-1.0)[0], 0.0);
  EXPECT_EQ(one.eval_scalar(2.0)[0], 0.0);
  EXPECT_DOUBLE_EQ(one.eval_scalar(0.5)[0], 1.0);
  const auto two = glue_blocks({f1, f2});
  for (double t : linspace(-1.0, 3.0, 401)) {
    double want = 0.0;
    if (t >= 0.0 && t <= 1.0) want = f1.eval_scalar(t)[0];
    if (t > 1.0 && t <= 2.0) want = f2.eval_scalar(t - 1.0)[0];
    EXPECT_NEAR(two.eval_scalar(t)[0], want, 1e-12) << t;
  }
}

TEST(Glue, RejectsEndpointMismatch) {
  const auto f1 = lower_scalar_cpwl(ScalarCpwl{{{0.0, 0.0}, {1.0, 1.0}}});
  const auto f2 = lower_scalar_cpwl(ScalarCpwl{{{0.0, 0.5}, {1.0, 0.0}}});
  try {
    glue_blocks({f1, f2});
    FAIL() << "expected a precondition error";
  } catch (const precondition_error& e) {
    EXPECT_NE(std::string(e.what()).find("t = 1"), std::string::npos);
  }
  EXPECT_THROW(glue_blocks({lower_scalar_cpwl(ScalarCpwl::constant(1.0))}), precondition_error);
}

TEST(CompileHomogeneous, StageZeroIsTheCurve) {
  auto g = rng(54);
  const auto op = random_op(g, 2, 2, 2);
  const auto c = random_curve(g, 2, 2);
  const auto r = compile_homogeneous(op, c, 0);
  for (double t : linspace(-1.0, 3.0, 401)) EXPECT_LT((r.net.eval_scalar(t) - c(t)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.builder, "homogeneous");
}

TEST(CompileHomogeneous, ZeroMaskAndZeroCurve) {
  const RefinementOp op{2, 1, 1, {}};
  const CpwlCurve c{{hat(0.25, 0.5, 0.75)}, 1};
  const auto r = compile_homogeneous(op, c, 3);
  for (double t : linspace(-1.0, 2.0, 31)) EXPECT_EQ(r.net.eval_scalar(t)[0], 0.0);
  const auto z = compile_homogeneous(scalar_op(2, {1.0, 1.0}), CpwlCurve::zero(1, 1), 3);
  for (double t : linspace(-1.0, 2.0, 31)) EXPECT_EQ(z.net.eval_scalar(t)[0], 0.0);
}

TEST(CompileHomogeneous, RejectsUnsupportedCurve) {
  const auto op = scalar_op(2, {1.0, 1.0});
  EXPECT_THROW(compile_homogeneous(op, CpwlCurve{{hat(0.5, 1.0, 1.5)}, 1}, 2), precondition_error);
  EXPECT_THROW(compile_homogeneous(op, CpwlCurve{{unit_ramp()}, 1}, 2), precondition_error);
}

TEST(CompileHomogeneous, SingleHatMatchesAtomicPath) {
  const auto op = scalar_op(2, {1.0, 1.0});
  const SpecialHat h{hat(0.25, 0.5, 0.75), 0.25};
  const auto r = compile_homogeneous(op, CpwlCurve{{h.base()}, 1}, 1);
  const auto atomic = atomic_unit_interval_net(op, h, 0, cfg_for(2, 1));
  for (double x : linspace(0.0, 1.0, 201)) EXPECT_NEAR(r.net.eval_scalar(x)[0], atomic.eval_scalar(x)[0], 1e-12);
}

TEST(CompileHomogeneous, ScalarHatStageFour) {
  const auto op = scalar_op(2, {1.0, 1.0});
  const CpwlCurve c{{hat(0.25, 0.5, 0.75)}, 1};
  const auto r = compile_homogeneous(op, c, 4);
  const auto v = apply_v_iterate(op, c, 4);
  double err = 0.0;
  for (double t : linspace(-0.5, 1.5, 10000)) err = std::max(err, std::abs(r.net.eval_scalar(t)[0] - v(t)[0]));
  EXPECT_LE(err, 1e-7);
}

TEST(CompileHomogeneous, RandomOperatorsMatchOracle) {
  auto g = rng(55);
  for (auto [M, p, L] : std::vector<std::tuple<int, int, int>>{{2, 1, 1}, {2, 2, 2}, {3, 2, 1}, {3, 1, 2}}) {
    const auto op = random_op(g, M, p, L);
    const auto c = random_curve(g, p, L, 3);
    for (int n = 1; n <= 3; ++n) {
      const auto r = compile_homogeneous(op, c, n);
      const auto v = apply_v_iterate(op, c, n);
      const double scale = std::max(1.0, v.max_abs());
      for (double t : linspace(-0.25, L + 0.25, 600))
        ASSERT_LE((r.net.eval_scalar(t) - v(t)).cwiseAbs().maxCoeff(), 1e-9 * scale)
            << "M=" << M << " p=" << p << " L=" << L << " n=" << n << " t=" << t;
    }
  }
}

TEST(CompileHomogeneous, DepthAffineWidthConstant) {
  const auto op = scalar_op(2, {0.75, 0.75});
  const CpwlCurve c{{hat(0.25, 0.5, 0.75)}, 1};
  std::vector<int> depth, width;
  for (int n = 2; n <= 8; ++n) {
    const auto r = compile_homogeneous(op, c, n);
    depth.push_back(r.stats.depth);
    width.push_back(r.stats.width);
  }
  for (std::size_t i = 2; i < depth.size(); ++i) EXPECT_EQ(depth[i] - depth[i - 1], depth[1] - depth[0]);
  for (int w : width) EXPECT_EQ(w, width.front());
}
