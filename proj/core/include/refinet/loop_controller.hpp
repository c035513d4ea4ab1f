#pragma once

#include "refinet/cpwl.hpp"
#include "refinet/relu_network.hpp"

#include <array>
#include <functional>
#include <vector>

namespace refinet {

struct LoopConfig {
  int M = 2;
  double rho = default_rho;
  double eps = 0.125;
  double delta_bar = 0.5;
  int n = 1;

  // delta_bar * rho * M^-(n+1)
  auto delta_n() const -> double;
  void validate() const;
};

// Boundary of the triangle (0,0), (1,1), (1,0), traversed from the seam.
auto embed(double t) -> Point2;
auto embed_ld(long double t) -> std::array<long double, 2>;

inline const Point2 fan_center{0.75, 0.25};

// Fan triangulation of the loop triangle around fan_center with boundary
// vertices E(t_i); the loop parameters 0, 1/3, 2/3 are always included.
// Vertex values are f(t_i); the center gets `center_value`, or the mean of
// the boundary values when it is empty.
auto loop_field(std::vector<double> ts, int d_out, const std::function<Vec(double)>& f, const Vec& center_value = {})
    -> PlanarCpwlField;

// F with F(E(t)) = E(R(t)).
auto controller_field(int M) -> PlanarCpwlField;
auto controller_net(int M) -> ReluNetwork;

// z_0 = E(x), z_{j+1} = net(z_j); states kept in long double between steps.
auto controller_orbit(double x, int n, const ReluNetwork& netF) -> std::vector<Point2>;

// Seam-folding readouts on [0,1].
auto readout_minus(double eps) -> ScalarCpwl;
auto readout_plus(double eps) -> ScalarCpwl;
auto readout_field(double eps, bool plus) -> PlanarCpwlField;

// Largest |h(t) - min(h(r-(t)), h(r+(t)))| over `samples` + 1 uniform points of [0,1].
auto min_readout_error(const SpecialHat& h, double eps, int samples = 10000) -> double;

// Selector profile theta_q(t) on [0,1].
auto theta(const LoopConfig& cfg, int q, double t) -> double;
// All M selectors as one field (component q = chi_q).
auto selector_field(const LoopConfig& cfg) -> PlanarCpwlField;
auto selector_net(const LoopConfig& cfg) -> ReluNetwork;

}  // namespace refinet
