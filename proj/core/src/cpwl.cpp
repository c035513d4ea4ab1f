#include "refinet/cpwl.hpp"

#include "refinet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace refinet {

ScalarCpwl::ScalarCpwl(std::vector<Breakpoint> points) : points_{std::move(points)} {
  if (points_.empty()) throw structural_error{"ScalarCpwl needs at least one breakpoint"};
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].t) || !std::isfinite(points_[i].v))
      throw structural_error{"ScalarCpwl breakpoint is not finite"};
    if (i > 0 && !(points_[i].t > points_[i - 1].t))
      throw structural_error{"ScalarCpwl abscissae must be strictly increasing"};
  }
}

auto ScalarCpwl::constant(double c) -> ScalarCpwl { return ScalarCpwl{{{0.0, c}}}; }

auto ScalarCpwl::operator()(double t) const noexcept -> double {
  if (t <= points_.front().t) return points_.front().v;
  if (t >= points_.back().t) return points_.back().v;
  auto it = std::upper_bound(points_.begin(), points_.end(), t,
                             [](double x, const Breakpoint& b) { return x < b.t; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  if (t == lo.t) return lo.v;
  return lo.v + (hi.v - lo.v) * ((t - lo.t) / (hi.t - lo.t));
}

auto ScalarCpwl::max_abs() const noexcept -> double {
  double m = 0.0;
  for (const auto& b : points_) m = std::max(m, std::abs(b.v));
  return m;
}

auto ScalarCpwl::is_zero() const noexcept -> bool {
  return std::all_of(points_.begin(), points_.end(), [](const Breakpoint& b) { return b.v == 0.0; });
}

auto merged_grid(const std::vector<const ScalarCpwl*>& fs) -> std::vector<double> {
  std::vector<double> ts;
  for (const auto* f : fs)
    for (const auto& b : f->points()) ts.push_back(b.t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

auto combine(const ScalarCpwl& f, const ScalarCpwl& g, combine_op op) -> ScalarCpwl {
  auto ts = merged_grid({&f, &g});
  if (op != combine_op::sum) {
    // crossings of f - g strictly inside merged pieces
    std::vector<double> cross;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double d0 = f(ts[i]) - g(ts[i]);
      const double d1 = f(ts[i + 1]) - g(ts[i + 1]);
      if ((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0)) {
        const double s = d0 / (d0 - d1);
        const double t = ts[i] + s * (ts[i + 1] - ts[i]);
        if (t > ts[i] && t < ts[i + 1]) cross.push_back(t);
      }
    }
    ts.insert(ts.end(), cross.begin(), cross.end());
  }
  return ScalarCpwl::from_samples(std::move(ts), [&](double t) {
    switch (op) {
      case combine_op::sum: return f(t) + g(t);
      case combine_op::min: return std::min(f(t), g(t));
      case combine_op::max: return std::max(f(t), g(t));
    }
    return 0.0;
  });
}

auto scaled(const ScalarCpwl& f, double c) -> ScalarCpwl {
  auto pts = f.points();
  for (auto& b : pts) b.v *= c;
  return ScalarCpwl{std::move(pts)};
}

auto translate_scale(const ScalarCpwl& f, double delta, double s) -> ScalarCpwl {
  if (s == 0.0) throw domain_error{"translate_scale: degenerate dilation s = 0"};
  std::vector<Breakpoint> pts;
  pts.reserve(f.size());
  for (const auto& b : f.points()) pts.push_back({(b.t + delta) / s, b.v});
  if (s < 0.0) std::reverse(pts.begin(), pts.end());
  return ScalarCpwl{std::move(pts)};
}

auto hat(double a, double b, double c, double height) -> ScalarCpwl {
  return ScalarCpwl{{{a, 0.0}, {b, height}, {c, 0.0}}};
}

auto compose(const ScalarCpwl& outer, const ScalarCpwl& inner) -> ScalarCpwl {
  std::vector<double> ts;
  const auto& in = inner.points();
  for (std::size_t i = 0; i < in.size(); ++i) {
    ts.push_back(in[i].t);
    if (i + 1 == in.size()) break;
    const double v0 = in[i].v;
    const double v1 = in[i + 1].v;
    if (v0 == v1) continue;
    for (const auto& b : outer.points()) {
      if ((b.t > v0 && b.t < v1) || (b.t < v0 && b.t > v1)) {
        const double t = in[i].t + (b.t - v0) / (v1 - v0) * (in[i + 1].t - in[i].t);
        if (t > in[i].t && t < in[i + 1].t) ts.push_back(t);
      }
    }
  }
  return ScalarCpwl::from_samples(std::move(ts), [&](double t) { return outer(inner(t)); });
}

auto unit_ramp() -> ScalarCpwl { return ScalarCpwl{{{0.0, 0.0}, {1.0, 1.0}}}; }

CpwlCurve::CpwlCurve(std::vector<ScalarCpwl> components, int support_window)
    : components_{std::move(components)}, support_window_{support_window} {
  if (components_.empty()) throw structural_error{"CpwlCurve needs p >= 1"};
  if (support_window_ < 1) throw structural_error{"CpwlCurve support window must be >= 1"};
}

auto CpwlCurve::zero(int p, int support_window) -> CpwlCurve {
  return CpwlCurve{std::vector<ScalarCpwl>(static_cast<std::size_t>(p), ScalarCpwl::constant(0.0)),
                   support_window};
}

auto CpwlCurve::operator()(double t) const -> Vec {
  Vec out(p());
  for (int i = 0; i < p(); ++i) out[i] = components_[static_cast<std::size_t>(i)](t);
  return out;
}

auto CpwlCurve::left_tail() const -> Vec {
  Vec out(p());
  for (int i = 0; i < p(); ++i) out[i] = components_[static_cast<std::size_t>(i)].left_tail();
  return out;
}

auto CpwlCurve::right_tail() const -> Vec {
  Vec out(p());
  for (int i = 0; i < p(); ++i) out[i] = components_[static_cast<std::size_t>(i)].right_tail();
  return out;
}

auto CpwlCurve::grid() const -> std::vector<double> {
  std::vector<const ScalarCpwl*> fs;
  for (const auto& c : components_) fs.push_back(&c);
  return merged_grid(fs);
}

auto CpwlCurve::breakpoint_count() const noexcept -> std::size_t {
  std::size_t n = 0;
  for (const auto& c : components_) n += c.size();
  return n;
}

auto CpwlCurve::max_abs() const noexcept -> double {
  double m = 0.0;
  for (const auto& c : components_) m = std::max(m, c.max_abs());
  return m;
}

auto CpwlCurve::is_compact(double tol) const -> bool {
  const double scale = std::max(1.0, max_abs());
  for (const auto& c : components_) {
    if (std::abs(c.left_tail()) > tol * scale || std::abs(c.right_tail()) > tol * scale) return false;
    if (c.first() < -tol || c.last() > support_window_ + tol) {
      // breakpoints outside the window are allowed only while the function is zero there
      if (std::abs(c(0.0)) > tol * scale || std::abs(c(support_window_)) > tol * scale) return false;
      for (const auto& b : c.points())
        if ((b.t < 0.0 || b.t > support_window_) && std::abs(b.v) > tol * scale) return false;
    }
  }
  return true;
}

auto CpwlCurve::is_zero() const noexcept -> bool {
  return std::all_of(components_.begin(), components_.end(), [](const ScalarCpwl& c) { return c.is_zero(); });
}

namespace {

auto zip(const CpwlCurve& a, const CpwlCurve& b, double sb) -> CpwlCurve {
  if (a.p() != b.p()) throw structural_error{"curve dimension mismatch"};
  std::vector<ScalarCpwl> cs;
  for (int i = 0; i < a.p(); ++i) cs.push_back(combine(a.component(i), scaled(b.component(i), sb), combine_op::sum));
  return CpwlCurve{std::move(cs), std::max(a.support_window(), b.support_window())};
}

}  // namespace

auto operator+(const CpwlCurve& a, const CpwlCurve& b) -> CpwlCurve { return zip(a, b, 1.0); }
auto operator-(const CpwlCurve& a, const CpwlCurve& b) -> CpwlCurve { return zip(a, b, -1.0); }

auto operator*(double c, const CpwlCurve& a) -> CpwlCurve {
  std::vector<ScalarCpwl> cs;
  for (const auto& f : a.components()) cs.push_back(scaled(f, c));
  return CpwlCurve{std::move(cs), a.support_window()};
}

auto polyline_curve(const std::vector<double>& ts, const std::vector<Vec>& pts, int support_window) -> CpwlCurve {
  if (ts.size() != pts.size() || ts.empty()) throw structural_error{"polyline: size mismatch"};
  const auto p = pts.front().size();
  std::vector<ScalarCpwl> cs;
  for (Eigen::Index i = 0; i < p; ++i) {
    std::vector<Breakpoint> b;
    b.reserve(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) b.push_back({ts[k], pts[k][i]});
    cs.emplace_back(std::move(b));
  }
  return CpwlCurve{std::move(cs), support_window};
}

SpecialHat::SpecialHat(ScalarCpwl base, double rho) : base_{std::move(base)}, rho_{rho} {
  if (!(rho_ > 0.0 && rho_ < 0.5)) throw precondition_error{"special hat: rho must lie in (0, 1/2)"};
  for (const auto& b : base_.points()) {
    if (b.v < 0.0) throw precondition_error{"special hat must be nonnegative"};
    if ((b.t < rho_ || b.t > 1.0 - rho_) && b.v != 0.0)
      throw precondition_error{"special hat must vanish outside [rho, 1-rho]"};
  }
  if (base_.left_tail() != 0.0 || base_.right_tail() != 0.0)
    throw precondition_error{"special hat must have zero tails"};
  // a piece crossing rho or 1-rho
  const double tol = 1e-12 * std::max(1.0, base_.max_abs());
  if (std::abs(base_(rho_)) > tol || std::abs(base_(1.0 - rho_)) > tol)
    throw precondition_error{"special hat must vanish outside [rho, 1-rho]"};
}

auto decompose_atomic(const CpwlCurve& gamma, double rho) -> std::vector<AtomicTerm> {
  if (!(rho > 0.0 && rho < 0.5)) throw precondition_error{"decompose_atomic: rho must lie in (0, 1/2)"};
  if (!gamma.is_compact()) throw precondition_error{"decompose_atomic: curve is not compactly supported"};
  auto grid = gamma.grid();
  const double bound = 1.0 - 2.0 * rho;
  for (;;) {
    std::vector<char> split(grid.size(), 0);  // split[i]: interval (i, i+1)
    bool any = false;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
      if (grid[i + 1] - grid[i - 1] > bound) {
        split[i - 1] = split[i] = 1;
        any = true;
      }
    }
    if (!any) break;
    std::vector<double> next;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      next.push_back(grid[i]);
      if (i + 1 < grid.size() && split[i]) next.push_back(0.5 * (grid[i] + grid[i + 1]));
    }
    grid = std::move(next);
  }
  std::vector<AtomicTerm> terms;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double delta = 0.5 * (grid[i - 1] + grid[i + 1]) - 0.5;
    for (int mu = 0; mu < gamma.p(); ++mu) {
      const double a = gamma.component(mu)(grid[i]);
      if (a == 0.0) continue;
      SpecialHat h{hat(grid[i - 1] - delta, grid[i] - delta, grid[i + 1] - delta), rho};
      terms.push_back({a, delta, std::move(h), mu});
    }
  }
  return terms;
}

auto evaluate_terms(const std::vector<AtomicTerm>& terms, int p, double t) -> Vec {
  Vec out = Vec::Zero(p);
  for (const auto& term : terms) out[term.mu] += term.a * term.hat(t - term.delta);
  return out;
}

}  // namespace refinet
