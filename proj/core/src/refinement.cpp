#include "refinet/refinement.hpp"

#include "refinet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace refinet {

RefinementOp::RefinementOp(int M, int p, int L, std::vector<MaskEntry> mask) : M_{M}, p_{p}, L_{L} {
  if (M_ < 2) throw structural_error{"refinement op: dilation M must be >= 2"};
  if (p_ < 1) throw structural_error{"refinement op: p must be >= 1"};
  if (L_ < 1) throw structural_error{"refinement op: support window L must be >= 1"};
  std::sort(mask.begin(), mask.end(), [](const MaskEntry& a, const MaskEntry& b) { return a.j < b.j; });
  for (auto& e : mask) {
    if (e.A.rows() != p_ || e.A.cols() != p_)
      throw structural_error{"refinement op: A_" + std::to_string(e.j) + " is not p x p"};
    if (!mask_.empty() && mask_.back().j == e.j)
      throw structural_error{"refinement op: duplicate mask index " + std::to_string(e.j)};
    if (e.A.isZero(0.0)) continue;
    if (e.j < 0 || e.j > (M_ - 1) * L_)
      throw structural_error{"refinement op: A_" + std::to_string(e.j) + " breaks support preservation (need 0 <= j <= " +
                             std::to_string((M_ - 1) * L_) + ")"};
    mask_.push_back(std::move(e));
  }
}

auto RefinementOp::A(int j) const -> Mat {
  for (const auto& e : mask_)
    if (e.j == j) return e.A;
  return Mat::Zero(p_, p_);
}

auto RefinementOp::S() const -> Mat {
  Mat s = Mat::Zero(p_, p_);
  for (const auto& e : mask_) s += e.A;
  return s;
}

auto digit_residual(double x, int M) -> std::pair<int, double> {
  if (!(x >= 0.0 && x <= 1.0)) throw domain_error{"digit map: x must lie in [0,1]"};
  if (x == 1.0) return {M - 1, 1.0};
  const double y = M * x;
  const double r = std::round(y);
  if (std::abs(y - r) < digit_snap_tol) {
    const int q = static_cast<int>(r);
    if (q >= M) return {M - 1, 1.0};
    return {q, 0.0};
  }
  const int q = static_cast<int>(std::floor(y));
  return {q, y - q};
}

auto residual_iterate(double x, int M, int n) -> DigitStream {
  if (n < 0) throw domain_error{"residual_iterate: n must be >= 0"};
  DigitStream s{x, {}, {}};
  s.residuals.push_back(x);
  double r = x;
  for (int j = 0; j < n; ++j) {
    auto [q, next] = digit_residual(r, M);
    s.digits.push_back(q);
    s.residuals.push_back(next);
    r = next;
  }
  // residual_iterate validates x even for n = 0
  if (n == 0 && !(x >= 0.0 && x <= 1.0)) throw domain_error{"digit map: x must lie in [0,1]"};
  return s;
}

auto exact_residual(double x, int M, int n) -> long double {
  if (!(x >= 0.0 && x <= 1.0)) throw domain_error{"digit map: x must lie in [0,1]"};
  if (x == 1.0) return 1.0L;
  if (x == 0.0) return 0.0L;
  int e = 0;
  const double f = std::frexp(x, &e);  // x = f 2^e, f in [0.5, 1)
  const int s = 53 - e;
  if (s > 120) {
    long double r = x;
    for (int j = 0; j < n; ++j) {
      r *= M;
      r -= std::floor(r);
    }
    return r;
  }
  using u128 = unsigned __int128;
  const u128 mod = u128{1} << s;
  u128 m = static_cast<u128>(std::ldexp(f, 53));
  for (int j = 0; j < n; ++j) m = (m * static_cast<u128>(M)) % mod;
  return std::ldexp(static_cast<long double>(m), -s);
}

auto apply_v(const RefinementOp& op, const CpwlCurve& gamma) -> CpwlCurve {
  if (gamma.p() != op.p()) throw structural_error{"apply_v: curve dimension does not match op"};
  const int M = op.M();
  const int p = op.p();
  const auto grid = gamma.grid();
  std::vector<double> ts;
  if (op.is_zero()) {
    ts.push_back(0.0);
  } else {
    ts.reserve(grid.size() * op.mask().size());
    for (const auto& e : op.mask())
      for (double s : grid) ts.push_back((s + e.j) / M);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
  std::vector<std::vector<Breakpoint>> comps(static_cast<std::size_t>(p));
  for (auto& c : comps) c.reserve(ts.size());
  Vec acc(p);
  for (double t : ts) {
    acc.setZero();
    for (const auto& e : op.mask()) acc.noalias() += e.A * gamma(M * t - e.j);
    for (int i = 0; i < p; ++i) comps[static_cast<std::size_t>(i)].push_back({t, acc[i]});
  }
  std::vector<ScalarCpwl> out;
  for (auto& c : comps) out.emplace_back(std::move(c));
  return CpwlCurve{std::move(out), op.L()};
}

auto oracle_cap() -> std::size_t {
  if (const char* env = std::getenv("REFINET_MAX_BREAKPOINTS")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 10'000'000;
}

auto predicted_breakpoints(const RefinementOp& op, const CpwlCurve& gamma, int n) -> double {
  return (static_cast<double>(gamma.breakpoint_count()) + n * static_cast<double>(op.mask().size())) *
         std::pow(static_cast<double>(op.M()), n);
}

void check_oracle_cap(const RefinementOp& op, const CpwlCurve& gamma, int n) {
  const double need = predicted_breakpoints(op, gamma, n);
  if (need > static_cast<double>(oracle_cap()))
    throw precondition_error{"oracle cap exceeded: stage " + std::to_string(n) + " needs about " +
                             std::to_string(static_cast<long long>(need)) + " breakpoints (cap " +
                             std::to_string(oracle_cap()) + ", set REFINET_MAX_BREAKPOINTS to raise it)"};
}

auto apply_v_iterate(const RefinementOp& op, const CpwlCurve& gamma, int n) -> CpwlCurve {
  check_oracle_cap(op, gamma, n);
  CpwlCurve g = gamma;
  for (int i = 0; i < n; ++i) g = apply_v(op, g);
  return g;
}

auto vectorize(const CpwlCurve& gamma, int L, double x) -> Vec {
  const int p = gamma.p();
  Vec out(p * L);
  for (int k = 0; k < L; ++k) out.segment(k * p, p) = gamma(x + k);
  return out;
}

auto block_transition(const RefinementOp& op, int q) -> Mat {
  if (q < 0 || q >= op.M()) throw domain_error{"block_transition: digit out of range"};
  const int p = op.p();
  const int L = op.L();
  Mat T = Mat::Zero(p * L, p * L);
  for (int k = 0; k < L; ++k)
    for (int l = 0; l < L; ++l) T.block(k * p, l * p, p, p) = op.A(q + op.M() * k - l);
  return T;
}

auto cascade_eval(const RefinementOp& op, const CpwlCurve& gamma, double x, int n) -> Vec {
  const auto ds = residual_iterate(x, op.M(), n);
  Vec v = vectorize(gamma, op.L(), ds.residuals.back());
  std::vector<Mat> T;
  for (int q = 0; q < op.M(); ++q) T.push_back(block_transition(op, q));
  for (int j = n - 1; j >= 0; --j) v = T[static_cast<std::size_t>(ds.digits[static_cast<std::size_t>(j)])] * v;
  return v;
}

}  // namespace refinet
