#include "refinet/loop_controller.hpp"

#include "refinet/errors.hpp"
#include "refinet/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace refinet {

auto LoopConfig::delta_n() const -> double { return delta_bar * rho * std::pow(static_cast<double>(M), -(n + 1)); }

void LoopConfig::validate() const {
  if (M < 2) throw precondition_error{"loop config: M must be >= 2"};
  if (!(rho > 0.0 && rho < 0.5)) throw precondition_error{"loop config: rho must lie in (0, 1/2)"};
  if (!(eps > 0.0 && eps < rho)) throw precondition_error{"loop config: epsilon must lie in (0, rho)"};
  if (!(delta_bar > 0.0 && delta_bar < 1.0)) throw precondition_error{"loop config: delta_bar must lie in (0, 1)"};
  if (n < 1) throw precondition_error{"loop config: n must be >= 1"};
}

auto embed(double t) -> Point2 {
  const auto e = embed_ld(t);
  return {static_cast<double>(e[0]), static_cast<double>(e[1])};
}

auto embed_ld(long double t) -> std::array<long double, 2> {
  if (!(t >= 0.0L && t <= 1.0L)) throw domain_error{"embed: t must lie in [0,1]"};
  if (t <= 1.0L / 3.0L) return {3.0L * t, 3.0L * t};
  if (t <= 2.0L / 3.0L) return {1.0L, 2.0L - 3.0L * t};
  return {3.0L - 3.0L * t, 0.0L};
}

auto loop_field(std::vector<double> ts, int d_out, const std::function<Vec(double)>& f, const Vec& center_value)
    -> PlanarCpwlField {
  ts.push_back(0.0);
  ts.push_back(1.0 / 3.0);
  ts.push_back(2.0 / 3.0);
  std::sort(ts.begin(), ts.end());
  std::vector<double> uniq;
  for (double t : ts) {
    if (!(t >= 0.0 && t < 1.0)) throw structural_error{"loop field: vertex parameter outside [0,1)"};
    if (uniq.empty() || t - uniq.back() > 1e-15) uniq.push_back(t);
  }
  const int K = static_cast<int>(uniq.size());
  PlanarCpwlField field;
  field.vertices.push_back(fan_center);
  field.values = Mat::Zero(K + 1, d_out);
  Vec mean = Vec::Zero(d_out);
  for (int i = 0; i < K; ++i) {
    field.vertices.push_back(embed(uniq[static_cast<std::size_t>(i)]));
    const Vec v = f(uniq[static_cast<std::size_t>(i)]);
    if (v.size() != d_out) throw structural_error{"loop field: value dimension mismatch"};
    field.values.row(i + 1) = v.transpose();
    mean += v;
  }
  field.values.row(0) = (center_value.size() == d_out ? center_value : Vec(mean / K)).transpose();
  for (int i = 0; i < K; ++i) field.triangles.push_back({0, i + 1, (i + 1) % K + 1});
  field.validate();
  return field;
}

auto controller_field(int M) -> PlanarCpwlField {
  if (M < 2) throw precondition_error{"controller: M must be >= 2"};
  // vertex parameter -> residual, both from exact integer data
  std::map<double, double> residual;
  for (int k = 0; k < M; ++k) {
    residual[static_cast<double>(k) / M] = 0.0;
    residual[(k + 1.0 / 3.0) / M] = 1.0 / 3.0;
    residual[(k + 2.0 / 3.0) / M] = 2.0 / 3.0;
  }
  residual[1.0 / 3.0] = static_cast<double>(M % 3) / 3.0;
  residual[2.0 / 3.0] = static_cast<double>((2 * M) % 3) / 3.0;
  std::vector<double> ts;
  for (const auto& [t, r] : residual) ts.push_back(t);
  auto value = [&](double t) -> Vec {
    const auto it = residual.find(t);
    const Point2 z = embed(it != residual.end() ? it->second : digit_residual(t, M).second);
    return z;
  };
  // rounded mean keeps every affine piece on a dyadic grid
  Vec mean = Vec::Zero(2);
  for (double t : ts) mean += value(t);
  mean /= static_cast<double>(ts.size());
  const Vec center = (mean * 256.0).array().round() / 256.0;
  auto field = loop_field(ts, 2, value, center);
  field.snap = std::ldexp(1.0, -16);
  return field;
}

auto controller_net(int M) -> ReluNetwork { return lower_planar_field(controller_field(M)); }

auto controller_orbit(double x, int n, const ReluNetwork& netF) -> std::vector<Point2> {
  if (netF.input_dim() != 2 || netF.output_dim() != 2) throw structural_error{"controller_orbit: net must map R^2 to R^2"};
  const auto e = embed_ld(x);
  std::vector<long double> z{e[0], e[1]};
  std::vector<Point2> out;
  out.emplace_back(static_cast<double>(z[0]), static_cast<double>(z[1]));
  for (int j = 0; j < n; ++j) {
    z = netF.eval_ld(z);
    out.emplace_back(static_cast<double>(z[0]), static_cast<double>(z[1]));
  }
  return out;
}

auto readout_minus(double eps) -> ScalarCpwl {
  if (!(eps > 0.0 && eps < 1.0)) throw precondition_error{"readout: epsilon must lie in (0,1)"};
  return ScalarCpwl{{{0.0, 0.0}, {1.0 - eps, 1.0 - eps}, {1.0, 0.0}}};
}

auto readout_plus(double eps) -> ScalarCpwl {
  if (!(eps > 0.0 && eps < 1.0)) throw precondition_error{"readout: epsilon must lie in (0,1)"};
  return ScalarCpwl{{{0.0, 1.0}, {eps, eps}, {1.0, 1.0}}};
}

auto readout_field(double eps, bool plus) -> PlanarCpwlField {
  const auto r = plus ? readout_plus(eps) : readout_minus(eps);
  return loop_field({eps, 1.0 - eps}, 1, [&](double t) { return Vec::Constant(1, r(t)); });
}

auto min_readout_error(const SpecialHat& h, double eps, int samples) -> double {
  if (!(eps < h.rho())) throw precondition_error{"min readout: epsilon must be smaller than the hat's rho"};
  const auto rm = readout_minus(eps);
  const auto rp = readout_plus(eps);
  double err = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    err = std::max(err, std::abs(h(t) - std::min(h(rm(t)), h(rp(t)))));
  }
  return err;
}

auto theta(const LoopConfig& cfg, int q, double t) -> double {
  const int M = cfg.M;
  if (q < 0 || q >= M) throw domain_error{"theta: digit out of range"};
  if (!(t >= 0.0 && t <= 1.0)) throw domain_error{"theta: t must lie in [0,1]"};
  if (t == 1.0) return q == M - 1 ? 1.0 : 0.0;
  const double d = cfg.delta_n();
  for (int k = 0; k < M; ++k) {
    const double a = static_cast<double>(k) / M;
    if (t >= a && t <= a + d) {
      const double s = (t - a) / d;
      const int out = k == 0 ? M - 1 : k - 1;
      if (q == out) return 1.0 - s;
      if (q == k) return s;
      return 0.0;
    }
  }
  const int cell = std::min(M - 1, static_cast<int>(std::floor(t * M)));
  return cell == q ? 1.0 : 0.0;
}

auto selector_field(const LoopConfig& cfg) -> PlanarCpwlField {
  cfg.validate();
  const int M = cfg.M;
  // ramp ends get exact one-hot values; (t - a) / delta is not exact there
  std::map<double, Vec> exact;
  for (int k = 0; k < M; ++k) {
    const double a = static_cast<double>(k) / M;
    exact.emplace(a, Vec::Unit(M, k == 0 ? M - 1 : k - 1));
    exact.emplace(a + cfg.delta_n(), Vec::Unit(M, k));
  }
  std::vector<double> ts;
  for (const auto& [t, v] : exact) ts.push_back(t);
  return loop_field(ts, M, [&](double t) {
    if (const auto it = exact.find(t); it != exact.end()) return Vec(it->second);
    Vec v(M);
    for (int q = 0; q < M; ++q) v[q] = theta(cfg, q, t);
    return v;
  });
}

auto selector_net(const LoopConfig& cfg) -> ReluNetwork { return lower_planar_field(selector_field(cfg)); }

}  // namespace refinet
