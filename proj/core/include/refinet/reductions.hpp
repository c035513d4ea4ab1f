#pragma once

#include "refinet/cascade_compiler.hpp"
#include "refinet/cpwl.hpp"
#include "refinet/refinement.hpp"

#include <map>
#include <optional>
#include <vector>

namespace refinet {

// B_r for W_r gamma = V gamma + B_r. Either per-stage curves (with an optional
// default for every stage) or templates B_r = sum_alpha lambda(r, alpha) B^(alpha)
// with lambda(r, 0) = 1.
class ForcingSchedule {
 public:
  ForcingSchedule(int p, int L) : p_{p}, L_{L} {}

  static auto none(int p, int L) -> ForcingSchedule { return ForcingSchedule{p, L}; }
  static auto constant(CpwlCurve B) -> ForcingSchedule;
  static auto explicit_list(std::vector<CpwlCurve> Bs) -> ForcingSchedule;
  // lambda(r, alpha) = ratio^r for alpha >= 1
  static auto geometric_templates(std::vector<CpwlCurve> curves, double ratio) -> ForcingSchedule;
  // table[r][alpha]; the first column must be 1
  static auto tabulated_templates(std::vector<CpwlCurve> curves, std::vector<std::vector<double>> table)
      -> ForcingSchedule;

  void set_stage(int r, CpwlCurve B);
  void set_default(CpwlCurve B);

  auto p() const noexcept -> int { return p_; }
  auto L() const noexcept -> int { return L_; }
  auto is_template() const noexcept -> bool { return !templates_.empty(); }
  auto templates() const noexcept -> const std::vector<CpwlCurve>& { return templates_; }
  auto stages() const noexcept -> const std::map<int, CpwlCurve>& { return stages_; }
  auto default_curve() const noexcept -> const std::optional<CpwlCurve>& { return default_; }
  auto ratio() const noexcept -> std::optional<double> { return ratio_; }
  auto table() const noexcept -> const std::vector<std::vector<double>>& { return table_; }

  // Number of stages covered; nullopt when unbounded.
  auto length() const -> std::optional<int>;
  auto lambda(int r, int alpha) const -> double;
  auto at(int r) const -> CpwlCurve;

 private:
  int p_;
  int L_;
  std::map<int, CpwlCurve> stages_;
  std::optional<CpwlCurve> default_;
  std::vector<CpwlCurve> templates_;
  std::optional<double> ratio_;
  std::vector<std::vector<double>> table_;
};

struct HomogeneousJob {
  int power;  // V^power applied to curve
  int stage;  // r, or -1 for the initial curve
  CpwlCurve curve;
};

// V^n gamma and V^{n-1-r} B_r for every nonzero B_r.
auto expand_stage_iterate(const RefinementOp& op, const CpwlCurve& gamma, const ForcingSchedule& schedule, int n)
    -> std::vector<HomogeneousJob>;
// Sum of oracle iterates over the jobs.
auto job_sum_oracle(const RefinementOp& op, const std::vector<HomogeneousJob>& jobs) -> CpwlCurve;
// W_{n-1} ... W_0 gamma on curves (tails allowed).
auto direct_stage_iterate(const RefinementOp& op, const CpwlCurve& gamma, const ForcingSchedule& schedule, int n)
    -> CpwlCurve;

auto compile_affine(const RefinementOp& op, const CpwlCurve& gamma, const ForcingSchedule& schedule, int n,
                    const LoopConfig& base = {}) -> CompiledIterate;

struct AnchorMismatch {
  CpwlCurve E;
  bool compact;
};

// E = V Gamma + B - Gamma; tails below 1e-10 (relative) are truncated when compact.
auto anchor_mismatch(const RefinementOp& op, const CpwlCurve& B, const CpwlCurve& Gamma) -> AnchorMismatch;

// theta(t) * e_1, theta the clamp ramp.
auto straight_anchor(int p) -> CpwlCurve;

struct AnchoredIterate {
  CompiledIterate defect;  // Wbar^n eta
  CompiledIterate full;    // Gamma + Wbar^n eta
  CpwlCurve mismatch;
};

auto compile_anchored(const RefinementOp& op, const CpwlCurve& B, const CpwlCurve& Gamma, const CpwlCurve& eta, int n,
                      const LoopConfig& base = {}) -> AnchoredIterate;
// W^n (Gamma + eta) by direct iteration on curves with tails.
auto anchored_oracle(const RefinementOp& op, const CpwlCurve& B, const CpwlCurve& Gamma, const CpwlCurve& eta, int n)
    -> CpwlCurve;

struct StateMaskEntry {
  int a;
  int b;
  int j;
  Mat A;
};

class FiniteStateSystem {
 public:
  FiniteStateSystem(int M, int p, int r, int L, std::vector<StateMaskEntry> mask,
                    std::vector<std::optional<CpwlCurve>> forcing = {});
  // A_j^{ab} = C[a][j] if b = sigma[a][j], else 0.
  static auto deterministic(int M, int p, int L, std::vector<std::vector<int>> sigma,
                            std::vector<std::vector<Mat>> C) -> FiniteStateSystem;

  auto M() const noexcept -> int { return M_; }
  auto p() const noexcept -> int { return p_; }
  auto r() const noexcept -> int { return r_; }
  auto L() const noexcept -> int { return L_; }
  auto mask() const noexcept -> const std::vector<StateMaskEntry>& { return mask_; }
  auto forcing() const noexcept -> const std::vector<std::optional<CpwlCurve>>& { return forcing_; }
  auto transitions() const noexcept -> const std::vector<std::vector<int>>& { return sigma_; }

  // Per-state application (oracle path).
  auto apply(const std::vector<CpwlCurve>& states) const -> std::vector<CpwlCurve>;

 private:
  int M_;
  int p_;
  int r_;
  int L_;
  std::vector<StateMaskEntry> mask_;
  std::vector<std::optional<CpwlCurve>> forcing_;
  std::vector<std::vector<int>> sigma_;
};

struct StackedSystem {
  RefinementOp op;
  std::optional<CpwlCurve> forcing;
};

auto stack(const FiniteStateSystem& sys) -> StackedSystem;
auto stack_curves(const std::vector<CpwlCurve>& states) -> CpwlCurve;
auto unstack_curve(const CpwlCurve& stacked, int r) -> std::vector<CpwlCurve>;

}  // namespace refinet
