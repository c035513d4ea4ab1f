#include "support.hpp"

#include "refinet/errors.hpp"
#include "refinet/loop_controller.hpp"

#include <gtest/gtest.h>

using namespace refinet;
using namespace testing_support;

namespace {

auto dist(const Point2& a, const Point2& b) -> double { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Embed, Examples) {
  EXPECT_EQ(embed(0.0), Point2(0.0, 0.0));
  EXPECT_EQ(embed(1.0), Point2(0.0, 0.0));
  EXPECT_NEAR(dist(embed(1.0 / 3.0), Point2(1.0, 1.0)), 0.0, 1e-15);
  EXPECT_NEAR(dist(embed(2.0 / 3.0), Point2(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(dist(embed(0.5), Point2(1.0, 0.5)), 0.0, 1e-15);
  EXPECT_THROW(embed(1.01), domain_error);
}

TEST(Embed, InjectiveOnHalfOpenInterval) {
  const auto ts = linspace(0.0, 1.0, 3001);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i)
    for (std::size_t j = i + 1; j + 1 < ts.size(); j += 97) EXPECT_GT(dist(embed(ts[i]), embed(ts[j])), 1e-6);
}

TEST(ControllerNet, OneStepExample) {
  const auto F = controller_net(2);
  const Vec z = F(embed(0.25));
  EXPECT_NEAR(z[0], 1.0, 1e-12);
  EXPECT_NEAR(z[1], 0.5, 1e-12);
}

TEST(ControllerNet, MapsLoopToShiftedLoop) {
  auto g = rng(41);
  for (int M : {2, 3, 4, 7}) {
    const auto F = controller_net(M);
    for (int i = 0; i < 2000; ++i) {
      const double t = uniform(g, 0.0, 1.0);
      const double r = static_cast<double>(exact_residual(t, M, 1));
      ASSERT_LT(dist(F(embed(t)), embed(r)), 1e-12) << "M=" << M << " t=" << t;
    }
  }
}

TEST(ControllerOrbit, AlternatesForOneThird) {
  const auto F = controller_net(2);
  const auto orbit = controller_orbit(1.0 / 3.0, 6, F);
  for (int j = 0; j <= 6; ++j) {
    const double want = j == 0 ? 1.0 / 3.0 : (j % 2 == 1 ? 2.0 / 3.0 : 1.0 / 3.0);
    EXPECT_LT(dist(orbit[static_cast<std::size_t>(j)], embed(want)), 1e-12) << j;
  }
}

TEST(ControllerOrbit, FixedPointsAndEndpoint) {
  for (int M : {2, 3, 5}) {
    const auto F = controller_net(M);
    for (double x : {0.0, 1.0}) {
      const auto orbit = controller_orbit(x, 8, F);
      for (const auto& z : orbit) EXPECT_LT(dist(z, Point2(0.0, 0.0)), 1e-12);
    }
  }
}

TEST(ControllerOrbit, TracksResiduals) {
  auto g = rng(42);
  for (int M : {2, 3, 5}) {
    const auto F = controller_net(M);
    for (int i = 0; i < 300; ++i) {
      const double x = uniform(g, 0.0, 1.0);
      const auto orbit = controller_orbit(x, 7, F);
      for (int j = 0; j <= 7; ++j) {
        const double r = static_cast<double>(exact_residual(x, M, j));
        ASSERT_LT(dist(orbit[static_cast<std::size_t>(j)], embed(r)), 1e-9) << "M=" << M << " x=" << x << " j=" << j;
      }
    }
  }
}

TEST(Readouts, Breakpoints) {
  const double eps = 0.1;
  const auto rm = readout_minus(eps);
  const auto rp = readout_plus(eps);
  EXPECT_EQ(rm(0.0), 0.0);
  EXPECT_DOUBLE_EQ(rm(0.9), 0.9);
  EXPECT_EQ(rm(1.0), 0.0);
  EXPECT_EQ(rp(0.0), 1.0);
  EXPECT_DOUBLE_EQ(rp(0.1), 0.1);
  EXPECT_EQ(rp(1.0), 1.0);
  for (double t : linspace(eps, 1.0 - eps, 101)) {
    EXPECT_NEAR(rm(t), t, 1e-15);
    EXPECT_NEAR(rp(t), t, 1e-15);
  }
}

TEST(Readouts, FieldsAgreeOnLoop) {
  for (bool plus : {false, true}) {
    const auto net = lower_planar_field(readout_field(0.1, plus));
    const auto r = plus ? readout_plus(0.1) : readout_minus(0.1);
    for (double t : linspace(0.0, 1.0, 2001)) EXPECT_NEAR(net(embed(t))[0], r(t), 1e-12);
  }
}

TEST(MinReadout, RecoversSpecialHats) {
  auto g = rng(43);
  for (int i = 0; i < 50; ++i) {
    const auto h = random_special_hat(g, 0.25);
    EXPECT_LT(min_readout_error(h, 0.125), 1e-14);
  }
  EXPECT_THROW(min_readout_error(SpecialHat{hat(0.25, 0.5, 0.75), 0.25}, 0.3), precondition_error);
}

TEST(Selectors, PartitionOfUnity) {
  for (int M : {2, 3, 5}) {
    for (int n : {1, 2, 4}) {
      LoopConfig cfg;
      cfg.M = M;
      cfg.n = n;
      const auto net = selector_net(cfg);
      for (double t : linspace(0.0, 1.0, 1501)) {
        const Vec chi = net(embed(t));
        double s = 0.0;
        for (int q = 0; q < M; ++q) {
          EXPECT_NEAR(chi[q], theta(cfg, q, t), 1e-10);
          EXPECT_GE(chi[q], -1e-10);
          s += chi[q];
        }
        EXPECT_NEAR(s, 1.0, 1e-10);
      }
    }
  }
}

TEST(Selectors, ExactOffTransitions) {
  auto g = rng(44);
  for (int M : {2, 3, 7}) {
    LoopConfig cfg;
    cfg.M = M;
    cfg.n = 3;
    const double d = cfg.delta_n();
    for (int i = 0; i < 2000; ++i) {
      const double t = uniform(g, 0.0, 1.0);
      const int k = std::min(M - 1, static_cast<int>(std::floor(t * M)));
      if (t - static_cast<double>(k) / M <= d) continue;
      for (int q = 0; q < M; ++q) EXPECT_EQ(theta(cfg, q, t), q == k ? 1.0 : 0.0);
    }
  }
}

TEST(Selectors, EndpointsAndRamp) {
  LoopConfig cfg;
  cfg.M = 3;
  cfg.n = 2;
  const double d = cfg.delta_n();
  EXPECT_DOUBLE_EQ(d, 0.5 * 0.25 / 27.0);
  EXPECT_EQ(theta(cfg, 2, 1.0), 1.0);
  EXPECT_EQ(theta(cfg, 0, 1.0), 0.0);
  EXPECT_EQ(theta(cfg, 2, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(theta(cfg, 0, d / 2), 0.5);
  EXPECT_DOUBLE_EQ(theta(cfg, 2, d / 2), 0.5);
  EXPECT_NEAR(theta(cfg, 0, 1.0 / 3.0 + d / 4), 0.75, 1e-12);
  EXPECT_NEAR(theta(cfg, 1, 1.0 / 3.0 + d / 4), 0.25, 1e-12);
  EXPECT_THROW(theta(cfg, 3, 0.5), domain_error);
}

TEST(LoopConfig, Validation) {
  LoopConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.eps = 0.3;
  EXPECT_THROW(cfg.validate(), precondition_error);
  cfg = LoopConfig{};
  cfg.M = 1;
  EXPECT_THROW(cfg.validate(), precondition_error);
}
