#pragma once

#include "refinet/cpwl.hpp"
#include "refinet/loop_controller.hpp"
#include "refinet/refinement.hpp"
#include "refinet/relu_network.hpp"

#include <string>
#include <vector>

namespace refinet {

// Inputs (lambda, y in R^N), output Pi_a(lambda, y); width 2N+1, depth 2.
auto product_gadget(double a, int N) -> ReluNetwork;

// (max(1, max_q |T_q^T|_inf))^n * max h * 2
auto gadget_bound(const RefinementOp& op, double hmax, int n) -> double;

// x -> (h(R^n(x)), x) for x in [0,1].
auto scalar_factor_net(const SpecialHat& h, const LoopConfig& cfg) -> ReluNetwork;

// x in [0,1] -> G^n(x) in R^{pL} for the atomic curve h * e_mu.
auto atomic_unit_interval_net(const RefinementOp& op, const SpecialHat& h, int mu, const LoopConfig& cfg)
    -> ReluNetwork;

// sigma_k(t) = ReLU(t-k+1) - ReLU(t-k), k = 1..L
auto ramp(int k, double t) -> double;

// F(t) = f_1(sigma_1(t)) + sum_{k>=2} (f_k(sigma_k(t)) - f_k(0)).
auto glue_blocks(const std::vector<ReluNetwork>& nets) -> ReluNetwork;

struct CompiledIterate {
  ReluNetwork net;
  int n;
  std::string builder;
  std::string params;
  NetStats stats;
};

// Loop configuration used for a job of depth n (cfg.n is overridden).
auto stage_config(const LoopConfig& base, int M, int n) -> LoopConfig;

auto compile_homogeneous(const RefinementOp& op, const CpwlCurve& gamma, int n, const LoopConfig& base = {})
    -> CompiledIterate;

}  // namespace refinet
