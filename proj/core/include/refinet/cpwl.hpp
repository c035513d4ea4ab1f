#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <vector>

namespace refinet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Breakpoint {
  double t;
  double v;
};

// Continuous piecewise-linear scalar function with constant tails. The tails
// are the values at the first and last breakpoints.
class ScalarCpwl {
 public:
  explicit ScalarCpwl(std::vector<Breakpoint> points);

  static auto constant(double c) -> ScalarCpwl;
  // Sample `f` at the given abscissae (sorted, duplicates dropped).
  template <typename F>
  static auto from_samples(std::vector<double> ts, F&& f) -> ScalarCpwl;

  auto operator()(double t) const noexcept -> double;

  auto points() const noexcept -> const std::vector<Breakpoint>& { return points_; }
  auto size() const noexcept -> std::size_t { return points_.size(); }
  auto left_tail() const noexcept -> double { return points_.front().v; }
  auto right_tail() const noexcept -> double { return points_.back().v; }
  auto first() const noexcept -> double { return points_.front().t; }
  auto last() const noexcept -> double { return points_.back().t; }
  auto max_abs() const noexcept -> double;
  auto is_zero() const noexcept -> bool;

 private:
  std::vector<Breakpoint> points_;
};

enum class combine_op { sum, min, max };

auto combine(const ScalarCpwl& f, const ScalarCpwl& g, combine_op op) -> ScalarCpwl;
auto scaled(const ScalarCpwl& f, double c) -> ScalarCpwl;

// result(t) = f(s*t - delta).
auto translate_scale(const ScalarCpwl& f, double delta, double s) -> ScalarCpwl;

// Tent with zero tails through (a,0), (b,height), (c,0).
auto hat(double a, double b, double c, double height = 1.0) -> ScalarCpwl;

// outer(inner(t)).
auto compose(const ScalarCpwl& outer, const ScalarCpwl& inner) -> ScalarCpwl;

// Clamp ramp: 0 for t <= 0, t on [0,1], 1 for t >= 1.
auto unit_ramp() -> ScalarCpwl;

// Sorted, exact-duplicate-free union of breakpoint abscissae.
auto merged_grid(const std::vector<const ScalarCpwl*>& fs) -> std::vector<double>;

// Curve t -> R^p. Compact curves have zero tails and live in [0, L].
class CpwlCurve {
 public:
  CpwlCurve(std::vector<ScalarCpwl> components, int support_window);

  static auto zero(int p, int support_window) -> CpwlCurve;

  auto operator()(double t) const -> Vec;
  auto p() const noexcept -> int { return static_cast<int>(components_.size()); }
  auto support_window() const noexcept -> int { return support_window_; }
  auto component(int i) const -> const ScalarCpwl& { return components_.at(static_cast<std::size_t>(i)); }
  auto components() const noexcept -> const std::vector<ScalarCpwl>& { return components_; }
  auto left_tail() const -> Vec;
  auto right_tail() const -> Vec;
  auto grid() const -> std::vector<double>;
  auto breakpoint_count() const noexcept -> std::size_t;
  auto max_abs() const noexcept -> double;
  auto is_compact(double tol = 1e-12) const -> bool;
  auto is_zero() const noexcept -> bool;

 private:
  std::vector<ScalarCpwl> components_;
  int support_window_;
};

auto operator+(const CpwlCurve& a, const CpwlCurve& b) -> CpwlCurve;
auto operator-(const CpwlCurve& a, const CpwlCurve& b) -> CpwlCurve;
auto operator*(double c, const CpwlCurve& a) -> CpwlCurve;

// Polyline through the given (t, point) vertices, constant beyond the ends.
auto polyline_curve(const std::vector<double>& ts, const std::vector<Vec>& pts, int support_window) -> CpwlCurve;

// Nonnegative bump supported in [rho, 1-rho].
class SpecialHat {
 public:
  SpecialHat(ScalarCpwl base, double rho);

  auto operator()(double t) const noexcept -> double { return base_(t); }
  auto base() const noexcept -> const ScalarCpwl& { return base_; }
  auto rho() const noexcept -> double { return rho_; }

 private:
  ScalarCpwl base_;
  double rho_;
};

// a * hat(t - delta) * e_mu
struct AtomicTerm {
  double a;
  double delta;
  SpecialHat hat;
  int mu;
};

inline constexpr double default_rho = 0.25;

auto decompose_atomic(const CpwlCurve& gamma, double rho = default_rho) -> std::vector<AtomicTerm>;
auto evaluate_terms(const std::vector<AtomicTerm>& terms, int p, double t) -> Vec;

template <typename F>
auto ScalarCpwl::from_samples(std::vector<double> ts, F&& f) -> ScalarCpwl {
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<Breakpoint> pts;
  pts.reserve(ts.size());
  for (double t : ts) pts.push_back({t, static_cast<double>(f(t))});
  return ScalarCpwl{std::move(pts)};
}

}  // namespace refinet
