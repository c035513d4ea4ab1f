#pragma once

#include "refinet/cpwl.hpp"
#include "refinet/refinement.hpp"
#include "refinet/relu_network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testing_support {

using namespace refinet;

inline auto rng(unsigned seed) -> std::mt19937_64 { return std::mt19937_64{seed}; }

inline auto uniform(std::mt19937_64& g, double lo, double hi) -> double {
  return std::uniform_real_distribution<double>{lo, hi}(g);
}

inline auto random_matrix(std::mt19937_64& g, int p, double scale) -> Mat {
  Mat A(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) A(i, j) = uniform(g, -scale, scale);
  return A;
}

// Full support-preserving mask 0 <= j <= (M-1)L with random entries.
inline auto random_op(std::mt19937_64& g, int M, int p, int L, double scale = 0.6) -> RefinementOp {
  std::vector<MaskEntry> mask;
  for (int j = 0; j <= (M - 1) * L; ++j) mask.push_back({j, random_matrix(g, p, scale)});
  return RefinementOp{M, p, L, std::move(mask)};
}

// Compact curve in [0, L] with `inner` random interior breakpoints per component.
inline auto random_curve(std::mt19937_64& g, int p, int L, int inner = 4) -> CpwlCurve {
  std::vector<ScalarCpwl> cs;
  for (int i = 0; i < p; ++i) {
    std::vector<double> ts;
    for (int k = 0; k < inner; ++k) ts.push_back(uniform(g, 0.02, L - 0.02));
    std::sort(ts.begin(), ts.end());
    std::vector<Breakpoint> b{{0.0, 0.0}};
    for (double t : ts)
      if (t > b.back().t + 1e-6) b.push_back({t, uniform(g, -1.0, 1.0)});
    if (b.back().t < L - 1e-6) b.push_back({static_cast<double>(L), 0.0});
    else b.back().v = 0.0;
    cs.emplace_back(std::move(b));
  }
  return CpwlCurve{std::move(cs), L};
}

// Nonnegative bump supported in [rho, 1 - rho] with random interior shape.
inline auto random_special_hat(std::mt19937_64& g, double rho) -> SpecialHat {
  const int k = 1 + static_cast<int>(uniform(g, 0.0, 4.0));
  std::vector<double> ts;
  for (int i = 0; i < k; ++i) ts.push_back(uniform(g, rho + 1e-3, 1.0 - rho - 1e-3));
  std::sort(ts.begin(), ts.end());
  std::vector<Breakpoint> b{{rho, 0.0}};
  for (double t : ts)
    if (t > b.back().t + 1e-6) b.push_back({t, uniform(g, 0.1, 2.0)});
  b.push_back({1.0 - rho, 0.0});
  return SpecialHat{ScalarCpwl{std::move(b)}, rho};
}

// (V^n gamma)(t) by direct recursion on the refinement equation; independent
// of the breakpoint-list oracle.
inline auto pointwise_iterate(const RefinementOp& op, const CpwlCurve& gamma, int n, double t) -> Vec {
  if (n == 0) return gamma(t);
  Vec acc = Vec::Zero(op.p());
  for (const auto& e : op.mask()) {
    const double s = op.M() * t - e.j;
    if (s <= 0.0 || s >= op.L()) continue;
    acc += e.A * pointwise_iterate(op, gamma, n - 1, s);
  }
  return acc;
}

inline auto linspace(double lo, double hi, int count) -> std::vector<double> {
  std::vector<double> ts;
  for (int i = 0; i < count; ++i) ts.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return ts;
}

template <typename F, typename G>
auto max_diff(const std::vector<double>& ts, F&& f, G&& g) -> double {
  double e = 0.0;
  for (double t : ts) e = std::max(e, (Vec(f(t)) - Vec(g(t))).cwiseAbs().maxCoeff());
  return e;
}

}  // namespace testing_support
