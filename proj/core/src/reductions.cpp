#include "refinet/reductions.hpp"

#include "refinet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace refinet {

namespace {

void check_support(const RefinementOp& op, const CpwlCurve& c, const std::string& what) {
  if (c.p() != op.p()) throw precondition_error{what + ": dimension does not match the operator"};
  const double scale = std::max(1.0, c.max_abs());
  for (const auto& f : c.components()) {
    if (std::abs(f.left_tail()) > 1e-12 * scale || std::abs(f.right_tail()) > 1e-12 * scale)
      throw precondition_error{what + " is not compactly supported"};
    bool outside = std::abs(f(0.0)) > 1e-12 * scale || std::abs(f(op.L())) > 1e-12 * scale;
    for (const auto& b : f.points())
      if ((b.t < 0.0 || b.t > op.L()) && std::abs(b.v) > 1e-12 * scale) outside = true;
    if (outside)
      throw precondition_error{what + " is not supported in [0, " + std::to_string(op.L()) + "]"};
  }
}

auto general_apply(int M, int p, int L, const std::vector<std::pair<const StateMaskEntry*, const CpwlCurve*>>& terms)
    -> CpwlCurve {
  std::vector<double> ts{0.0};
  for (const auto& [e, g] : terms)
    for (double s : g->grid()) ts.push_back((s + e->j) / M);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<std::vector<Breakpoint>> comps(static_cast<std::size_t>(p));
  for (double t : ts) {
    Vec acc = Vec::Zero(p);
    for (const auto& [e, g] : terms) acc += e->A * (*g)(M * t - e->j);
    for (int i = 0; i < p; ++i) comps[static_cast<std::size_t>(i)].push_back({t, acc[i]});
  }
  std::vector<ScalarCpwl> out;
  for (auto& c : comps) out.emplace_back(std::move(c));
  return CpwlCurve{std::move(out), L};
}

// Zero values below tol and drop redundant zero breakpoints at both ends.
auto truncate_tails(const ScalarCpwl& f, double tol) -> ScalarCpwl {
  auto pts = f.points();
  for (auto& b : pts)
    if (std::abs(b.v) <= tol) b.v = 0.0;
  std::size_t lo = 0;
  while (lo + 1 < pts.size() && pts[lo].v == 0.0 && pts[lo + 1].v == 0.0) ++lo;
  std::size_t hi = pts.size();
  while (hi > lo + 1 && pts[hi - 1].v == 0.0 && pts[hi - 2].v == 0.0) --hi;
  return ScalarCpwl{std::vector<Breakpoint>(pts.begin() + static_cast<std::ptrdiff_t>(lo),
                                            pts.begin() + static_cast<std::ptrdiff_t>(hi))};
}

}  // namespace

auto ForcingSchedule::constant(CpwlCurve B) -> ForcingSchedule {
  ForcingSchedule s{B.p(), B.support_window()};
  s.default_ = std::move(B);
  return s;
}

auto ForcingSchedule::explicit_list(std::vector<CpwlCurve> Bs) -> ForcingSchedule {
  if (Bs.empty()) throw structural_error{"forcing: empty stage list"};
  ForcingSchedule s{Bs.front().p(), Bs.front().support_window()};
  for (std::size_t r = 0; r < Bs.size(); ++r) s.set_stage(static_cast<int>(r), std::move(Bs[r]));
  return s;
}

auto ForcingSchedule::geometric_templates(std::vector<CpwlCurve> curves, double ratio) -> ForcingSchedule {
  if (curves.empty()) throw structural_error{"forcing: no template curves"};
  ForcingSchedule s{curves.front().p(), curves.front().support_window()};
  s.templates_ = std::move(curves);
  s.ratio_ = ratio;
  return s;
}

auto ForcingSchedule::tabulated_templates(std::vector<CpwlCurve> curves, std::vector<std::vector<double>> table)
    -> ForcingSchedule {
  if (curves.empty()) throw structural_error{"forcing: no template curves"};
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (table[r].size() != curves.size())
      throw structural_error{"forcing: lambda row " + std::to_string(r) + " has the wrong length"};
    if (table[r][0] != 1.0) throw structural_error{"forcing: lambda_{r,0} must be 1"};
  }
  ForcingSchedule s{curves.front().p(), curves.front().support_window()};
  s.templates_ = std::move(curves);
  s.table_ = std::move(table);
  return s;
}

void ForcingSchedule::set_stage(int r, CpwlCurve B) {
  if (r < 0) throw structural_error{"forcing: negative stage"};
  if (B.p() != p_) throw structural_error{"forcing: curve dimension mismatch"};
  stages_.insert_or_assign(r, std::move(B));
}

void ForcingSchedule::set_default(CpwlCurve B) {
  if (B.p() != p_) throw structural_error{"forcing: curve dimension mismatch"};
  default_ = std::move(B);
}

auto ForcingSchedule::length() const -> std::optional<int> {
  if (is_template()) {
    if (ratio_) return std::nullopt;
    return static_cast<int>(table_.size());
  }
  if (default_ || stages_.empty()) return std::nullopt;
  int r = 0;
  while (stages_.count(r)) ++r;
  return r;
}

auto ForcingSchedule::lambda(int r, int alpha) const -> double {
  if (alpha == 0) return 1.0;
  if (ratio_) return std::pow(*ratio_, r);
  return table_.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(alpha));
}

auto ForcingSchedule::at(int r) const -> CpwlCurve {
  if (is_template()) {
    CpwlCurve acc = templates_.front();
    for (std::size_t a = 1; a < templates_.size(); ++a) acc = acc + lambda(r, static_cast<int>(a)) * templates_[a];
    return acc;
  }
  if (auto it = stages_.find(r); it != stages_.end()) return it->second;
  if (default_) return *default_;
  return CpwlCurve::zero(p_, L_);
}

auto expand_stage_iterate(const RefinementOp& op, const CpwlCurve& gamma, const ForcingSchedule& schedule, int n)
    -> std::vector<HomogeneousJob> {
  if (n < 0) throw precondition_error{"expand: n must be >= 0"};
  if (const auto len = schedule.length(); len && *len < n)
    throw precondition_error{"forcing schedule covers " + std::to_string(*len) + " stages, stage " +
                             std::to_string(n) + " requested"};
  check_support(op, gamma, "initial curve");
  std::vector<HomogeneousJob> jobs{{n, -1, gamma}};
  for (int r = 0; r < n; ++r) {
    auto B = schedule.at(r);
    check_support(op, B, "forcing B_" + std::to_string(r));
    if (!B.is_zero()) jobs.push_back({n - 1 - r, r, std::move(B)});
  }
  return jobs;
}

auto job_sum_oracle(const RefinementOp& op, const std::vector<HomogeneousJob>& jobs) -> CpwlCurve {
  CpwlCurve acc = CpwlCurve::zero(op.p(), op.L());
  for (const auto& j : jobs) acc = acc + apply_v_iterate(op, j.curve, j.power);
  return acc;
}

auto direct_stage_iterate(const RefinementOp& op, const CpwlCurve& gamma, const ForcingSchedule& schedule, int n)
    -> CpwlCurve {
  check_oracle_cap(op, gamma, n);
  CpwlCurve g = gamma;
  for (int r = 0; r < n; ++r) g = apply_v(op, g) + schedule.at(r);
  return g;
}

auto compile_affine(const RefinementOp& op, const CpwlCurve& gamma, const ForcingSchedule& schedule, int n,
                    const LoopConfig& base) -> CompiledIterate {
  const auto jobs = expand_stage_iterate(op, gamma, schedule, n);
  const int p = op.p();
  // state (t, acc)
  Mat init = Mat::Zero(1 + p, 1);
  init(0, 0) = 1.0;
  auto net = post_affine(ReluNetwork::identity(1), init, Vec::Zero(1 + p));
  Mat fan = Mat::Zero(2 + p, 1 + p);
  fan(0, 0) = fan(1, 0) = 1.0;
  fan.bottomRightCorner(p, p).setIdentity();
  Mat add = Mat::Zero(1 + p, 1 + 2 * p);
  add(0, 0) = 1.0;
  add.block(1, 1, p, p).setIdentity();
  add.block(1, 1 + p, p, p).setIdentity();
  for (const auto& job : jobs) {
    if (job.curve.is_zero()) continue;
    const auto c = compile_homogeneous(op, job.curve, job.power, base);
    const int d = c.net.depth();
    auto stage = parallel({delay(1, d, channel_sign::general), c.net, delay(p, d, channel_sign::general)});
    stage = post_affine(pre_affine(stage, fan, Vec::Zero(2 + p)), add, Vec::Zero(1 + p));
    net = serial(net, stage);
  }
  Mat out = Mat::Zero(p, 1 + p);
  out.rightCols(p).setIdentity();
  net = post_affine(net, out, Vec::Zero(p));
  std::string params = "M=" + std::to_string(op.M()) + " p=" + std::to_string(p) + " L=" + std::to_string(op.L()) +
                       " n=" + std::to_string(n) + " jobs=" + std::to_string(jobs.size());
  const auto stats = net_stats(net);
  return CompiledIterate{std::move(net), n, "affine", params, stats};
}

auto anchor_mismatch(const RefinementOp& op, const CpwlCurve& B, const CpwlCurve& Gamma) -> AnchorMismatch {
  if (Gamma.p() != op.p() || B.p() != op.p()) throw precondition_error{"anchor: dimension mismatch"};
  CpwlCurve E = apply_v(op, Gamma) + B - Gamma;
  const double tol = 1e-10 * std::max(1.0, std::max(Gamma.max_abs(), B.max_abs()));
  bool compact = true;
  for (const auto& f : E.components())
    if (std::abs(f.left_tail()) > tol || std::abs(f.right_tail()) > tol) compact = false;
  if (!compact) return {std::move(E), false};
  std::vector<ScalarCpwl> cs;
  for (const auto& f : E.components()) cs.push_back(truncate_tails(f, tol));
  return {CpwlCurve{std::move(cs), op.L()}, true};
}

auto straight_anchor(int p) -> CpwlCurve {
  std::vector<ScalarCpwl> cs{unit_ramp()};
  for (int i = 1; i < p; ++i) cs.push_back(ScalarCpwl::constant(0.0));
  return CpwlCurve{std::move(cs), 1};
}

auto compile_anchored(const RefinementOp& op, const CpwlCurve& B, const CpwlCurve& Gamma, const CpwlCurve& eta, int n,
                      const LoopConfig& base) -> AnchoredIterate {
  auto m = anchor_mismatch(op, B, Gamma);
  if (!m.compact)
    throw precondition_error{
        "anchor mismatch V Gamma + B - Gamma is not compactly supported; choose endpoint values with "
        "S Gamma_- + B_- = Gamma_- and S Gamma_+ + B_+ = Gamma_+"};
  auto defect = compile_affine(op, eta, ForcingSchedule::constant(m.E), n, base);
  const int p = op.p();
  Mat sum(p, 2 * p);
  sum << Mat::Identity(p, p), Mat::Identity(p, p);
  auto net = post_affine(parallel_shared({defect.net, lower_curve(Gamma)}), sum, Vec::Zero(p));
  const auto stats = net_stats(net);
  CompiledIterate full{std::move(net), n, "anchored", defect.params, stats};
  return {std::move(defect), std::move(full), std::move(m.E)};
}

auto anchored_oracle(const RefinementOp& op, const CpwlCurve& B, const CpwlCurve& Gamma, const CpwlCurve& eta, int n)
    -> CpwlCurve {
  CpwlCurve g = Gamma + eta;
  check_oracle_cap(op, g, n);
  for (int r = 0; r < n; ++r) g = apply_v(op, g) + B;
  return g;
}

FiniteStateSystem::FiniteStateSystem(int M, int p, int r, int L, std::vector<StateMaskEntry> mask,
                                     std::vector<std::optional<CpwlCurve>> forcing)
    : M_{M}, p_{p}, r_{r}, L_{L}, mask_{std::move(mask)}, forcing_{std::move(forcing)} {
  if (M_ < 2 || p_ < 1 || r_ < 1 || L_ < 1) throw structural_error{"finite-state system: bad dimensions"};
  for (const auto& e : mask_) {
    if (e.a < 0 || e.a >= r_ || e.b < 0 || e.b >= r_) throw structural_error{"finite-state system: state out of range"};
    if (e.A.rows() != p_ || e.A.cols() != p_) throw structural_error{"finite-state system: block is not p x p"};
    if (e.j < 0 || e.j > (M_ - 1) * L_)
      throw structural_error{"finite-state system: A_" + std::to_string(e.j) + " breaks statewise support preservation"};
  }
  if (!forcing_.empty() && static_cast<int>(forcing_.size()) != r_)
    throw structural_error{"finite-state system: one forcing slot per state required"};
  forcing_.resize(static_cast<std::size_t>(r_));
}

auto FiniteStateSystem::deterministic(int M, int p, int L, std::vector<std::vector<int>> sigma,
                                      std::vector<std::vector<Mat>> C) -> FiniteStateSystem {
  if (sigma.size() != C.size()) throw structural_error{"finite-state system: transitions and matrices differ in size"};
  const int r = static_cast<int>(sigma.size());
  std::vector<StateMaskEntry> mask;
  for (int a = 0; a < r; ++a) {
    const auto& row = sigma[static_cast<std::size_t>(a)];
    if (row.size() != C[static_cast<std::size_t>(a)].size())
      throw structural_error{"finite-state system: transition row length mismatch"};
    for (std::size_t j = 0; j < row.size(); ++j)
      mask.push_back({a, row[j], static_cast<int>(j), C[static_cast<std::size_t>(a)][j]});
  }
  FiniteStateSystem sys{M, p, r, L, std::move(mask)};
  sys.sigma_ = std::move(sigma);
  return sys;
}

auto FiniteStateSystem::apply(const std::vector<CpwlCurve>& states) const -> std::vector<CpwlCurve> {
  if (static_cast<int>(states.size()) != r_) throw structural_error{"finite-state apply: wrong number of states"};
  std::vector<CpwlCurve> out;
  for (int a = 0; a < r_; ++a) {
    std::vector<std::pair<const StateMaskEntry*, const CpwlCurve*>> terms;
    for (const auto& e : mask_)
      if (e.a == a) terms.emplace_back(&e, &states[static_cast<std::size_t>(e.b)]);
    auto c = general_apply(M_, p_, L_, terms);
    if (forcing_[static_cast<std::size_t>(a)]) c = c + *forcing_[static_cast<std::size_t>(a)];
    out.push_back(std::move(c));
  }
  return out;
}

auto stack(const FiniteStateSystem& sys) -> StackedSystem {
  const int p = sys.p();
  const int r = sys.r();
  std::map<int, Mat> blocks;
  for (const auto& e : sys.mask()) {
    auto [it, fresh] = blocks.try_emplace(e.j, Mat::Zero(p * r, p * r));
    it->second.block(e.a * p, e.b * p, p, p) += e.A;
  }
  std::vector<MaskEntry> mask;
  for (auto& [j, A] : blocks) mask.push_back({j, std::move(A)});
  std::optional<CpwlCurve> forcing;
  const bool any = std::any_of(sys.forcing().begin(), sys.forcing().end(), [](const auto& f) { return f.has_value(); });
  if (any) {
    std::vector<CpwlCurve> parts;
    for (const auto& f : sys.forcing()) parts.push_back(f ? *f : CpwlCurve::zero(p, sys.L()));
    forcing = stack_curves(parts);
  }
  return {RefinementOp{sys.M(), p * r, sys.L(), std::move(mask)}, std::move(forcing)};
}

auto stack_curves(const std::vector<CpwlCurve>& states) -> CpwlCurve {
  if (states.empty()) throw structural_error{"stack: no states"};
  std::vector<ScalarCpwl> cs;
  int L = 1;
  for (const auto& s : states) {
    cs.insert(cs.end(), s.components().begin(), s.components().end());
    L = std::max(L, s.support_window());
  }
  return CpwlCurve{std::move(cs), L};
}

auto unstack_curve(const CpwlCurve& stacked, int r) -> std::vector<CpwlCurve> {
  if (r < 1 || stacked.p() % r != 0) throw structural_error{"unstack: dimension is not a multiple of r"};
  const int p = stacked.p() / r;
  std::vector<CpwlCurve> out;
  for (int a = 0; a < r; ++a) {
    std::vector<ScalarCpwl> cs(stacked.components().begin() + a * p, stacked.components().begin() + (a + 1) * p);
    out.emplace_back(std::move(cs), stacked.support_window());
  }
  return out;
}

}  // namespace refinet
