#include "refinet/cascade_compiler.hpp"

#include "refinet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace refinet {

namespace {

auto triplets_to(int rows, int cols, const std::vector<Eigen::Triplet<double>>& t) -> SpMat {
  SpMat s(rows, cols);
  s.setFromTriplets(t.begin(), t.end());
  s.makeCompressed();
  return s;
}

// output i = input order[i]
auto selection(int in, const std::vector<int>& order) -> SpMat {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < order.size(); ++i) t.emplace_back(static_cast<int>(i), order[i], 1.0);
  return triplets_to(static_cast<int>(order.size()), in, t);
}

auto loop_x() -> ScalarCpwl { return ScalarCpwl{{{0.0, 0.0}, {1.0 / 3.0, 1.0}, {2.0 / 3.0, 1.0}, {1.0, 0.0}}}; }
auto loop_y() -> ScalarCpwl { return ScalarCpwl{{{0.0, 0.0}, {1.0 / 3.0, 1.0}, {2.0 / 3.0, 0.0}, {1.0, 0.0}}}; }

struct LoopNets {
  LoopConfig cfg;
  ReluNetwork F;
  ReluNetwork chi;
  ReluNetwork rho_minus;
  ReluNetwork rho_plus;
};

auto loop_nets(const LoopConfig& cfg) -> LoopNets {
  cfg.validate();
  return {cfg, controller_net(cfg.M), selector_net(cfg), lower_planar_field(readout_field(cfg.eps, false)),
          lower_planar_field(readout_field(cfg.eps, true))};
}

// t -> (x, E(x)) with x = front(t); one relu layer.
auto front_stage(const ScalarCpwl& front) -> ReluNetwork {
  return lower_cpwl({front, compose(loop_x(), front), compose(loop_y(), front)});
}

// (x, z) -> (x, z_n)
auto controller_pass(const LoopNets& nets, int n) -> ReluNetwork {
  const auto step = parallel(delay(1, nets.F.depth(), channel_sign::nonnegative), nets.F);
  auto out = ReluNetwork::identity(3);
  for (int j = 0; j < n; ++j) out = serial(out, step);
  return out;
}

// (x, z) -> (h(rho(z)), x)
auto readout_stage(const LoopNets& nets, const SpecialHat& h) -> ReluNetwork {
  const auto hl = lower_scalar_cpwl(h.base());
  const auto both = parallel_shared({serial(nets.rho_minus, hl), serial(nets.rho_plus, hl)});
  const auto s = serial(both, min_gadget());
  const auto joined = parallel(delay(1, s.depth(), channel_sign::nonnegative), s);
  return post_affine(joined, selection(2, {1, 0}), Vec::Zero(2));
}

// (s, x) -> (z_0, Phi_0) with Phi_0^(b) = s e_{ells[b]}
auto reembed_stage(int pL, const std::vector<int>& ells) -> ReluNetwork {
  const auto e = parallel(passthrough(1, channel_sign::nonnegative), lower_cpwl({loop_x(), loop_y()}));
  const int N = static_cast<int>(ells.size()) * pL;
  std::vector<Eigen::Triplet<double>> t{{0, 1, 1.0}, {1, 2, 1.0}};
  for (std::size_t b = 0; b < ells.size(); ++b) t.emplace_back(2 + static_cast<int>(b) * pL + ells[b], 0, 1.0);
  return post_affine(e, triplets_to(2 + N, 3, t), Vec::Zero(2 + N));
}

// (z, Phi) -> (z', Phi') where Phi' = sum_q Pi_a(chi_q(z), T_q^T Phi) branchwise.
auto recursive_block(const LoopNets& nets, const std::vector<Mat>& T, int branches, double a) -> ReluNetwork {
  const int M = static_cast<int>(T.size());
  const int pL = static_cast<int>(T.front().rows());
  const int N = branches * pL;
  const int D = std::max(nets.chi.depth(), nets.F.depth());
  const auto loop = parallel_shared({pad_to_depth(nets.chi, D, channel_sign::nonnegative),
                                     pad_to_depth(nets.F, D, channel_sign::nonnegative)});
  const auto stageA = parallel(loop, delay(N, D, channel_sign::general));  // -> (chi, z', Phi)

  std::vector<int> active;
  for (int q = 0; q < M; ++q)
    if (!T[static_cast<std::size_t>(q)].isZero(0.0)) active.push_back(q);
  const int in = M + 2 + N;
  const int G = static_cast<int>(active.size());
  const int w1 = G * (2 * N + 1) + 2;
  const int w2 = G * 2 * N + 2;
  std::vector<Eigen::Triplet<double>> t1, t2, t3;
  Vec b1 = Vec::Zero(w1), b2 = Vec::Zero(w2), b3 = Vec::Zero(2 + N);
  for (int g = 0; g < G; ++g) {
    const int q = active[static_cast<std::size_t>(g)];
    const Mat Tt = T[static_cast<std::size_t>(q)].transpose();
    const int u0 = g * (2 * N + 1);  // u: [u0, u0+N), w: [u0+N, u0+2N), lambda+: u0+2N
    for (int br = 0; br < branches; ++br) {
      for (int r = 0; r < pL; ++r) {
        const int row = br * pL + r;
        t1.emplace_back(u0 + row, q, a);
        for (int c = 0; c < pL; ++c) {
          const double v = Tt(r, c);
          if (v == 0.0) continue;
          const int col = M + 2 + br * pL + c;
          t1.emplace_back(u0 + row, col, -v);
          t1.emplace_back(u0 + N + row, col, -v);
        }
      }
    }
    t1.emplace_back(u0 + 2 * N, q, 1.0);
    const int v0 = g * 2 * N;  // v: [v0, v0+N), u passthrough: [v0+N, v0+2N)
    for (int row = 0; row < N; ++row) {
      t2.emplace_back(v0 + row, u0 + 2 * N, -a);
      t2.emplace_back(v0 + row, u0 + N + row, -1.0);
      b2[v0 + row] = a;
      t2.emplace_back(v0 + N + row, u0 + row, 1.0);
      t3.emplace_back(2 + row, v0 + row, -1.0);
      t3.emplace_back(2 + row, v0 + N + row, -1.0);
      b3[2 + row] += a;
    }
  }
  for (int i = 0; i < 2; ++i) {
    t1.emplace_back(w1 - 2 + i, M + i, 1.0);
    t2.emplace_back(w2 - 2 + i, w1 - 2 + i, 1.0);
    t3.emplace_back(i, w2 - 2 + i, 1.0);
  }
  const ReluNetwork stageB{in,
                           {Layer{triplets_to(w1, in, t1), b1, activation::relu},
                            Layer{triplets_to(w2, w1, t2), b2, activation::relu},
                            Layer{triplets_to(2 + N, w2, t3), b3, activation::linear}}};
  return serial(stageA, stageB);
}

// t -> readout * (Phi_n^(b))_b for the atomic curve h, input x = front(t).
auto atomic_core(const RefinementOp& op, const SpecialHat& h, const LoopNets& nets, const ScalarCpwl& front,
                 const std::vector<int>& ells, const Mat& readout) -> ReluNetwork {
  const int n = nets.cfg.n;
  const int pL = op.p() * op.L();
  const int N = static_cast<int>(ells.size()) * pL;
  if (readout.cols() != N) throw structural_error{"atomic core: readout has the wrong width"};
  std::vector<Mat> T;
  for (int q = 0; q < op.M(); ++q) T.push_back(block_transition(op, q));
  const double a = gadget_bound(op, h.base().max_abs(), n);
  auto net = serial(front_stage(front), controller_pass(nets, n));
  net = serial(net, readout_stage(nets, h));
  net = serial(net, reembed_stage(pL, ells));
  const auto block = recursive_block(nets, T, static_cast<int>(ells.size()), a);
  for (int j = 0; j < n; ++j) net = serial(net, block);
  Mat R = Mat::Zero(readout.rows(), 2 + N);
  R.rightCols(N) = readout;
  return post_affine(net, R, Vec::Zero(readout.rows()));
}

auto check_window(const RefinementOp& op, const CpwlCurve& gamma) {
  if (gamma.p() != op.p()) throw precondition_error{"curve dimension does not match the operator"};
  const double scale = std::max(1.0, gamma.max_abs());
  for (const auto& c : gamma.components()) {
    if (std::abs(c.left_tail()) > 1e-12 * scale || std::abs(c.right_tail()) > 1e-12 * scale)
      throw precondition_error{"curve is not compactly supported"};
    bool outside = std::abs(c(0.0)) > 1e-12 * scale || std::abs(c(op.L())) > 1e-12 * scale;
    for (const auto& b : c.points())
      if ((b.t < 0.0 || b.t > op.L()) && std::abs(b.v) > 1e-12 * scale) outside = true;
    if (outside) throw precondition_error{"curve is not supported in [0, L]"};
  }
}

auto describe(const RefinementOp& op, const LoopConfig& cfg, int n) -> std::string {
  std::ostringstream os;
  os << "M=" << op.M() << " p=" << op.p() << " L=" << op.L() << " n=" << n << " rho=" << cfg.rho
     << " eps=" << cfg.eps << " delta_bar=" << cfg.delta_bar;
  return os.str();
}

}  // namespace

auto product_gadget(double a, int N) -> ReluNetwork {
  if (!(a > 0.0)) throw precondition_error{"product gadget: a must be positive"};
  // layer 1: u = ReLU(a lambda - y), w = ReLU(-y), l = ReLU(lambda)
  std::vector<Eigen::Triplet<double>> t1, t2, t3;
  for (int i = 0; i < N; ++i) {
    t1.emplace_back(i, 0, a);
    t1.emplace_back(i, 1 + i, -1.0);
    t1.emplace_back(N + i, 1 + i, -1.0);
  }
  t1.emplace_back(2 * N, 0, 1.0);
  // layer 2: v = ReLU(a - a l - w), u kept
  Vec b2 = Vec::Zero(2 * N);
  for (int i = 0; i < N; ++i) {
    t2.emplace_back(i, 2 * N, -a);
    t2.emplace_back(i, N + i, -1.0);
    b2[i] = a;
    t2.emplace_back(N + i, i, 1.0);
    t3.emplace_back(i, i, -1.0);
    t3.emplace_back(i, N + i, -1.0);
  }
  return ReluNetwork{N + 1,
                     {Layer{triplets_to(2 * N + 1, N + 1, t1), Vec::Zero(2 * N + 1), activation::relu},
                      Layer{triplets_to(2 * N, 2 * N + 1, t2), b2, activation::relu},
                      Layer{triplets_to(N, 2 * N, t3), Vec::Constant(N, a), activation::linear}}};
}

auto gadget_bound(const RefinementOp& op, double hmax, int n) -> double {
  double norm = 1.0;
  for (int q = 0; q < op.M(); ++q) {
    const Mat Tt = block_transition(op, q).transpose();
    norm = std::max(norm, Tt.cwiseAbs().rowwise().sum().maxCoeff());
  }
  return std::pow(norm, n) * std::max(hmax, 1e-300) * 2.0;
}

auto scalar_factor_net(const SpecialHat& h, const LoopConfig& cfg) -> ReluNetwork {
  if (!(cfg.eps < h.rho())) throw precondition_error{"scalar factor: epsilon must be smaller than the hat's rho"};
  const auto nets = loop_nets(cfg);
  auto net = serial(front_stage(unit_ramp()), controller_pass(nets, cfg.n));
  return serial(net, readout_stage(nets, h));
}

auto atomic_unit_interval_net(const RefinementOp& op, const SpecialHat& h, int mu, const LoopConfig& cfg)
    -> ReluNetwork {
  if (mu < 0 || mu >= op.p()) throw precondition_error{"atomic net: direction index out of range"};
  if (!(cfg.eps < h.rho())) throw precondition_error{"atomic net: epsilon must be smaller than the hat's rho"};
  const int pL = op.p() * op.L();
  std::vector<int> ells(static_cast<std::size_t>(pL));
  for (int l = 0; l < pL; ++l) ells[static_cast<std::size_t>(l)] = l;
  Mat R = Mat::Zero(pL, pL * pL);
  for (int l = 0; l < pL; ++l) R(l, l * pL + mu) = 1.0;
  if (op.is_zero()) return post_affine(lower_cpwl({unit_ramp()}), Mat::Zero(pL, 1), Vec::Zero(pL));
  return atomic_core(op, h, loop_nets(cfg), unit_ramp(), ells, R);
}

auto ramp(int k, double t) -> double { return std::max(0.0, t - k + 1) - std::max(0.0, t - k); }

auto glue_blocks(const std::vector<ReluNetwork>& nets) -> ReluNetwork {
  if (nets.empty()) throw precondition_error{"glue: no blocks"};
  const int L = static_cast<int>(nets.size());
  const int p = nets.front().output_dim();
  std::vector<Vec> at0, at1;
  for (const auto& f : nets) {
    if (f.input_dim() != 1 || f.output_dim() != p) throw structural_error{"glue: blocks must map R to R^p"};
    at0.push_back(f.eval_scalar(0.0));
    at1.push_back(f.eval_scalar(1.0));
  }
  constexpr double tol = 1e-9;
  if (at0.front().cwiseAbs().maxCoeff() > tol) throw precondition_error{"glue: first block does not vanish at 0"};
  if (at1.back().cwiseAbs().maxCoeff() > tol) throw precondition_error{"glue: last block does not vanish at 1"};
  for (int k = 0; k + 1 < L; ++k)
    if ((at1[static_cast<std::size_t>(k)] - at0[static_cast<std::size_t>(k) + 1]).cwiseAbs().maxCoeff() > tol)
      throw precondition_error{"glue: blocks " + std::to_string(k + 1) + " and " + std::to_string(k + 2) +
                               " do not match at t = " + std::to_string(k + 1)};
  // sigma_k from ReLU(t-k+1), ReLU(t-k)
  std::vector<Eigen::Triplet<double>> t1, t2;
  Vec b1(2 * L);
  for (int k = 1; k <= L; ++k) {
    t1.emplace_back(2 * (k - 1), 0, 1.0);
    b1[2 * (k - 1)] = -(k - 1.0);
    t1.emplace_back(2 * (k - 1) + 1, 0, 1.0);
    b1[2 * (k - 1) + 1] = -static_cast<double>(k);
    t2.emplace_back(k - 1, 2 * (k - 1), 1.0);
    t2.emplace_back(k - 1, 2 * (k - 1) + 1, -1.0);
  }
  const ReluNetwork sigma{1,
                          {Layer{triplets_to(2 * L, 1, t1), b1, activation::relu},
                           Layer{triplets_to(L, 2 * L, t2), Vec::Zero(L), activation::linear}}};
  auto net = serial(sigma, parallel(nets));
  Mat S = Mat::Zero(p, L * p);
  Vec c = Vec::Zero(p);
  for (int k = 0; k < L; ++k) {
    S.middleCols(k * p, p).setIdentity();
    if (k > 0) c -= at0[static_cast<std::size_t>(k)];
  }
  return post_affine(net, S, c);
}

auto stage_config(const LoopConfig& base, int M, int n) -> LoopConfig {
  LoopConfig cfg = base;
  cfg.M = M;
  cfg.n = std::max(n, 1);
  return cfg;
}

auto compile_homogeneous(const RefinementOp& op, const CpwlCurve& gamma, int n, const LoopConfig& base)
    -> CompiledIterate {
  if (n < 0) throw precondition_error{"compile: n must be >= 0"};
  check_window(op, gamma);
  const auto cfg = stage_config(base, op.M(), n);
  cfg.validate();
  const int p = op.p();
  auto finish = [&](ReluNetwork net) {
    const auto stats = net_stats(net);
    return CompiledIterate{std::move(net), n, "homogeneous", describe(op, cfg, n), stats};
  };
  if (n == 0) return finish(lower_curve(gamma));
  const auto terms = decompose_atomic(gamma, cfg.rho);
  if (terms.empty() || op.is_zero())
    return finish(post_affine(lower_cpwl({ScalarCpwl::constant(0.0)}), Mat::Zero(p, 1), Vec::Zero(p)));

  const auto nets = loop_nets(cfg);
  const int pL = p * op.L();
  const double shift_scale = std::pow(static_cast<double>(op.M()), -n);
  std::vector<ReluNetwork> cores;
  for (std::size_t i = 0; i < terms.size();) {
    // terms of one node share delta and hat
    std::size_t j = i;
    Vec coeff = Vec::Zero(p);
    while (j < terms.size() && terms[j].delta == terms[i].delta) {
      coeff[terms[j].mu] += terms[j].a;
      ++j;
    }
    const auto& h = terms[i].hat;
    for (int k = 0; k < op.L(); ++k) {
      const double c0 = k + shift_scale * terms[i].delta;
      const ScalarCpwl front{{{c0, 0.0}, {c0 + 1.0, 1.0}}};
      std::vector<int> ells;
      Mat R = Mat::Zero(p, p * pL);
      for (int r = 0; r < p; ++r) {
        ells.push_back(k * p + r);
        for (int mu = 0; mu < p; ++mu) R(r, r * pL + mu) = coeff[mu];
      }
      cores.push_back(atomic_core(op, h, nets, front, ells, R));
    }
    i = j;
  }
  Mat S = Mat::Zero(p, static_cast<Eigen::Index>(cores.size()) * p);
  for (std::size_t c = 0; c < cores.size(); ++c) S.middleCols(static_cast<Eigen::Index>(c) * p, p).setIdentity();
  return finish(post_affine(parallel_shared(cores), S, Vec::Zero(p)));
}

}  // namespace refinet
