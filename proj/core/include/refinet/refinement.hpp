#pragma once

#include "refinet/cpwl.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace refinet {

struct MaskEntry {
  int j;
  Mat A;
};

// (V gamma)(t) = sum_j A_j gamma(M t - j), support window [0, L].
class RefinementOp {
 public:
  RefinementOp(int M, int p, int L, std::vector<MaskEntry> mask);

  auto M() const noexcept -> int { return M_; }
  auto p() const noexcept -> int { return p_; }
  auto L() const noexcept -> int { return L_; }
  auto mask() const noexcept -> const std::vector<MaskEntry>& { return mask_; }
  // Zero matrix when j is not in the mask.
  auto A(int j) const -> Mat;
  auto S() const -> Mat;
  auto is_zero() const noexcept -> bool { return mask_.empty(); }

 private:
  int M_;
  int p_;
  int L_;
  std::vector<MaskEntry> mask_;  // sorted by j, zero matrices dropped
};

struct DigitStream {
  double x;
  std::vector<int> digits;        // q_1..q_n
  std::vector<double> residuals;  // R^0..R^n
};

// Snap tolerance for M x landing on an integer.
inline constexpr double digit_snap_tol = 1e-12;

auto digit_residual(double x, int M) -> std::pair<int, double>;
auto residual_iterate(double x, int M, int n) -> DigitStream;

// R^n(x) for the double x evaluated without rounding in the orbit
// (result rounded once to long double).
auto exact_residual(double x, int M, int n) -> long double;

auto apply_v(const RefinementOp& op, const CpwlCurve& gamma) -> CpwlCurve;
auto apply_v_iterate(const RefinementOp& op, const CpwlCurve& gamma, int n) -> CpwlCurve;

// Breakpoint budget for oracle iterates; REFINET_MAX_BREAKPOINTS overrides 1e7.
auto oracle_cap() -> std::size_t;
auto predicted_breakpoints(const RefinementOp& op, const CpwlCurve& gamma, int n) -> double;
void check_oracle_cap(const RefinementOp& op, const CpwlCurve& gamma, int n);

// G(x) = (gamma(x), gamma(x+1), ..., gamma(x+L-1)).
auto vectorize(const CpwlCurve& gamma, int L, double x) -> Vec;

auto block_transition(const RefinementOp& op, int q) -> Mat;

// T_{q1} ... T_{qn} G(R^n x).
auto cascade_eval(const RefinementOp& op, const CpwlCurve& gamma, double x, int n) -> Vec;

}  // namespace refinet
