#include "refinet/gallery.hpp"

#include "refinet/errors.hpp"

#include <cmath>
#include <map>
#include <string>

namespace refinet {

namespace {

auto e1(int p) -> Vec {
  Vec e = Vec::Zero(p);
  e[0] = 1.0;
  return e;
}

auto vec2(double x, double y) -> Vec {
  Vec v(2);
  v << x, y;
  return v;
}

auto mat2(double a, double b, double c, double d) -> Mat {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

auto homogeneous_op(const std::vector<Mat>& A) -> RefinementOp {
  std::vector<MaskEntry> mask;
  for (std::size_t j = 0; j < A.size(); ++j) mask.push_back({static_cast<int>(j), A[j]});
  return RefinementOp{static_cast<int>(A.size()), static_cast<int>(A.front().rows()), 1, std::move(mask)};
}

}  // namespace

auto rotation(double angle) -> Mat { return mat2(std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle)); }

auto generator_matrices(const GeneratorSpec& spec) -> std::vector<Mat> {
  const auto& P = spec.vertices;
  if (P.size() < 3) throw structural_error{"generator: at least two edges required"};
  const auto p = P.front().size();
  if (P.front().norm() != 0.0 || (P.back() - e1(static_cast<int>(p))).norm() > 1e-12)
    throw structural_error{"generator: vertex chain must run from 0 to e_1"};
  const std::size_t M = P.size() - 1;
  if (!spec.matrices.empty()) {
    if (spec.matrices.size() != M) throw structural_error{"generator: one matrix per edge required"};
    return spec.matrices;
  }
  if (p != 2) throw structural_error{"generator: rotation encoding is planar; give explicit matrices"};
  std::vector<Mat> A;
  for (std::size_t j = 0; j < M; ++j) {
    const Vec d = P[j + 1] - P[j];
    Mat m = d.norm() * rotation(std::atan2(d[1], d[0]));
    if (j < spec.reflect.size() && spec.reflect[j]) m = m * mat2(1.0, 0.0, 0.0, -1.0);
    A.push_back(m);
  }
  return A;
}

void check_edge_condition(const RefinementOp& op, const std::vector<Vec>& vertices, double tol) {
  const int p = op.p();
  for (int j = 0; j < op.M(); ++j) {
    const Vec d = vertices[static_cast<std::size_t>(j) + 1] - vertices[static_cast<std::size_t>(j)];
    if ((op.A(j) * e1(p) - d).cwiseAbs().maxCoeff() > tol)
      throw precondition_error{"generator: edge condition fails at j=" + std::to_string(j)};
  }
  if ((op.S() * e1(p) - e1(p)).cwiseAbs().maxCoeff() > tol)
    throw precondition_error{"generator: S e_1 != e_1"};
}

auto polygonal_generator(const GeneratorSpec& spec) -> RefinementOp {
  auto op = homogeneous_op(generator_matrices(spec));
  check_edge_condition(op, spec.vertices);
  return op;
}

auto chain_vertices(const RefinementOp& op) -> std::vector<Vec> {
  std::vector<Vec> P{Vec::Zero(op.p())};
  for (int j = 0; j < op.M(); ++j) P.push_back(P.back() + op.A(j) * e1(op.p()));
  return P;
}

auto koch_spec() -> GeneratorSpec {
  return {{vec2(0, 0), vec2(1.0 / 3, 0), vec2(0.5, std::sqrt(3.0) / 6), vec2(2.0 / 3, 0), vec2(1, 0)}, {}, {}};
}

auto levy_spec() -> GeneratorSpec { return {{vec2(0, 0), vec2(0.5, 0.5), vec2(1, 0)}, {}, {}}; }

auto heighway_spec() -> GeneratorSpec { return {{vec2(0, 0), vec2(0.5, 0.5), vec2(1, 0)}, {false, true}, {}}; }

auto hilbert_type_spec() -> GeneratorSpec {
  return {{vec2(0, 0), vec2(0, 0.5), vec2(0.5, 0.5), vec2(1, 0.5), vec2(1, 0)},
          {},
          {mat2(0, 0.5, 0.5, 0), mat2(0.5, 0, 0, 0.5), mat2(0.5, 0, 0, 0.5), mat2(0, -0.5, -0.5, 0)}};
}

auto hilbert_rp_data(int p) -> HilbertRp {
  if (p < 1 || p > 4) throw precondition_error{"hilbert_rp: p must lie in [2, 4]"};
  HilbertRp h{1, {Vec::Constant(1, 0.0), Vec::Constant(1, 0.5), Vec::Constant(1, 1.0)},
              {Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0)}};
  for (int q = 2; q <= p; ++q) {
    const int n = 1 << (q - 1);
    HilbertRp next{q, {}, {}};
    auto lift = [&](double x, const Vec& v) {
      Vec out(q);
      out[0] = x;
      out.tail(q - 1) = v;
      return out;
    };
    for (int j = 0; j <= 2 * n; ++j) {
      if (j < n) next.vertices.push_back(lift(0.0, h.vertices[static_cast<std::size_t>(j)]));
      else if (j == n) next.vertices.push_back(lift(0.5, h.vertices[static_cast<std::size_t>(n - 1)]));
      else next.vertices.push_back(lift(1.0, h.vertices[static_cast<std::size_t>(2 * n - j)]));
    }
    for (int j = 0; j < 2 * n; ++j) {
      Mat U = Mat::Zero(q, q);
      if (j <= n - 2 || j >= n + 1) {
        const int src = j <= n - 2 ? j : 2 * n - 1 - j;
        const double s = j <= n - 2 ? 1.0 : -1.0;
        const Mat& Up = h.U[static_cast<std::size_t>(src)];
        U(0, 1) = s;
        U.block(1, 0, q - 1, 1) = s * Up.col(0);
        U.block(1, 2, q - 1, q - 2) = Up.rightCols(q - 2);
      } else {
        U(0, 0) = 1.0;
        U.bottomRightCorner(q - 1, q - 1) = h.U[static_cast<std::size_t>(n - 1)];
      }
      next.U.push_back(U);
    }
    h = std::move(next);
  }
  return h;
}

auto hilbert_rp(int p) -> RefinementOp {
  if (p < 2 || p > 4) throw precondition_error{"hilbert_rp: p must lie in [2, 4]"};
  const auto h = hilbert_rp_data(p);
  std::vector<Mat> A;
  for (const auto& U : h.U) A.push_back(0.5 * U);
  auto op = homogeneous_op(A);
  check_edge_condition(op, h.vertices);
  return op;
}

auto polygonal_oracle(const RefinementOp& op, int n) -> CpwlCurve {
  if (n < 0) throw precondition_error{"oracle: n must be >= 0"};
  const int p = op.p();
  const int M = op.M();
  if (std::pow(static_cast<double>(M), n) > static_cast<double>(oracle_cap()))
    throw precondition_error{"oracle: stage exceeds the breakpoint budget"};
  const auto P = chain_vertices(op);
  std::vector<double> ts{0.0, 1.0};
  std::vector<Vec> vs{Vec::Zero(p), e1(p)};
  for (int s = 0; s < n; ++s) {
    std::vector<double> nt;
    std::vector<Vec> nv;
    for (int j = 0; j < M; ++j) {
      const Mat A = op.A(j);
      for (std::size_t k = j == 0 ? 0 : 1; k < ts.size(); ++k) {
        nt.push_back((ts[k] + j) / M);
        nv.push_back(P[static_cast<std::size_t>(j)] + A * vs[k]);
      }
    }
    ts = std::move(nt);
    vs = std::move(nv);
  }
  return polyline_curve(ts, vs, 1);
}

auto anchored_instance(const RefinementOp& op) -> AnchoredInstance {
  const int p = op.p();
  return {op, CpwlCurve::zero(p, op.L()), straight_anchor(p), CpwlCurve::zero(p, op.L())};
}

auto gosper_angle() -> double { return std::atan(std::sqrt(3.0) / 5.0); }

auto gosper_system() -> FiniteStateSystem {
  const double pi = std::acos(-1.0);
  const double phi = gosper_angle();
  const std::vector<std::vector<double>> theta{{0, -pi / 3, -pi, -2 * pi / 3, 0, 0, pi / 3},
                                               {pi / 3, 0, 0, -2 * pi / 3, -pi, -pi / 3, 0}};
  // state A = 0, B = 1
  std::vector<std::vector<int>> sigma{{0, 1, 1, 0, 0, 0, 1}, {0, 1, 1, 1, 0, 0, 1}};
  std::vector<std::vector<Mat>> C(2);
  for (int a = 0; a < 2; ++a)
    for (double th : theta[static_cast<std::size_t>(a)])
      C[static_cast<std::size_t>(a)].push_back(rotation(phi + th) / std::sqrt(7.0));
  auto sys = FiniteStateSystem::deterministic(7, 2, 1, std::move(sigma), std::move(C));
  for (int a = 0; a < 2; ++a) {
    Vec s = Vec::Zero(2);
    for (const auto& e : sys.mask())
      if (e.a == a) s += e.A * e1(2);
    if ((s - e1(2)).cwiseAbs().maxCoeff() > 1e-12)
      throw precondition_error{"gosper: copy maps do not close up to e_1"};
  }
  return sys;
}

auto gosper_anchored() -> AnchoredInstance {
  const auto st = stack(gosper_system());
  const auto G = straight_anchor(2);
  return {st.op, CpwlCurve::zero(4, 1), stack_curves({G, G}), CpwlCurve::zero(4, 1)};
}

auto gosper_oracle(int n) -> std::vector<CpwlCurve> {
  if (n < 0) throw precondition_error{"oracle: n must be >= 0"};
  if (std::pow(7.0, n) > static_cast<double>(oracle_cap()))
    throw precondition_error{"oracle: stage exceeds the breakpoint budget"};
  const auto sys = gosper_system();
  const auto& sigma = sys.transitions();
  std::vector<std::vector<Mat>> C(2, std::vector<Mat>(7));
  for (const auto& e : sys.mask()) C[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(e.j)] = e.A;
  std::vector<double> ts{0.0, 1.0};
  std::vector<std::vector<Vec>> vs(2, std::vector<Vec>{Vec::Zero(2), e1(2)});
  for (int s = 0; s < n; ++s) {
    std::vector<double> nt;
    for (int j = 0; j < 7; ++j)
      for (std::size_t k = j == 0 ? 0 : 1; k < ts.size(); ++k) nt.push_back((ts[k] + j) / 7);
    std::vector<std::vector<Vec>> nv(2);
    for (int a = 0; a < 2; ++a) {
      Vec P = Vec::Zero(2);
      for (int j = 0; j < 7; ++j) {
        const Mat& A = C[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)];
        const auto& src = vs[static_cast<std::size_t>(sigma[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)])];
        for (std::size_t k = j == 0 ? 0 : 1; k < ts.size(); ++k) nv[static_cast<std::size_t>(a)].push_back(P + A * src[k]);
        P += A * e1(2);
      }
    }
    ts = std::move(nt);
    vs = std::move(nv);
  }
  return {polyline_curve(ts, vs[0], 1), polyline_curve(ts, vs[1], 1)};
}

auto ConnectorInstance::lambda(int n) const -> double { return std::ldexp(1.0, -n); }
auto ConnectorInstance::start(int n) const -> Vec { return a0 + lambda(n) * a1; }
auto ConnectorInstance::end(int n) const -> Vec { return b0 + lambda(n) * b1; }

auto ConnectorInstance::anchor(int n) const -> CpwlCurve { return polyline_curve({0.0, 1.0}, {start(n), end(n)}, 1); }

auto ConnectorInstance::defect_op() const -> RefinementOp {
  std::vector<MaskEntry> mask;
  for (int j = 0; j < ell; ++j) mask.push_back({2 * j, A[static_cast<std::size_t>(j)]});
  return RefinementOp{M(), p, 1, std::move(mask)};
}

namespace {

// copy(j, Mt - 2j) on I_j, straight connectors on J_j, minus next(t); zero
// outside [0,1]. With straight anchors every piece is affine, so the copy
// interval end values determine the curve.
template <typename Copy>
auto copy_link_curve(const ConnectorInstance& c, const CpwlCurve& next, Copy copy) -> CpwlCurve {
  const int M = c.M();
  std::vector<double> ts;
  std::vector<Vec> vs;
  for (int j = 0; j < c.ell; ++j) {
    const double t0 = 2.0 * j / M;
    const double t1 = (2.0 * j + 1) / M;
    ts.push_back(t0);
    vs.push_back(copy(j, 0.0) - next(t0));
    ts.push_back(t1);
    vs.push_back(copy(j, 1.0) - next(t1));
  }
  std::vector<double> all{-1.0};
  std::vector<Vec> allv{Vec::Zero(c.p)};
  for (std::size_t k = 0; k < ts.size(); ++k) {
    all.push_back(ts[k]);
    allv.push_back(vs[k]);
  }
  all.push_back(2.0);
  allv.push_back(Vec::Zero(c.p));
  auto curve = polyline_curve(all, allv, 1);
  std::vector<ScalarCpwl> cs;
  for (const auto& f : curve.components()) {
    std::vector<Breakpoint> b;
    for (const auto& pt : f.points())
      if (pt.t >= 0.0 && pt.t <= 1.0) b.push_back(pt);
    if (std::abs(b.front().v) > 1e-12 || std::abs(b.back().v) > 1e-12)
      throw precondition_error{"connector: forcing does not vanish at the ends of [0,1]"};
    b.front().v = 0.0;
    b.back().v = 0.0;
    cs.emplace_back(std::move(b));
  }
  return CpwlCurve{std::move(cs), 1};
}

}  // namespace

auto ConnectorInstance::forcing_direct(int n) const -> CpwlCurve {
  const auto G = anchor(n);
  const auto next = anchor(n + 1);
  return copy_link_curve(
      *this, next,
      [&](int j, double s) -> Vec { return A[static_cast<std::size_t>(j)] * G(s) + u[static_cast<std::size_t>(j)]; });
}

auto ConnectorInstance::forcing_templates() const -> std::vector<CpwlCurve> {
  const auto G0 = polyline_curve({0.0, 1.0}, {a0, b0}, 1);
  const auto G1 = polyline_curve({0.0, 1.0}, {a1, b1}, 1);
  // lambda_{n+1} = lambda_n / 2 moves the next-stage anchor into B^(1) with weight 1/2
  const auto B0 = copy_link_curve(
      *this, G0,
      [&](int j, double s) -> Vec { return A[static_cast<std::size_t>(j)] * G0(s) + u[static_cast<std::size_t>(j)]; });
  const auto B1 = copy_link_curve(*this, 0.5 * G1,
                                  [&](int j, double s) -> Vec { return A[static_cast<std::size_t>(j)] * G1(s); });
  return {B0, B1};
}

auto ConnectorInstance::schedule() const -> ForcingSchedule {
  return ForcingSchedule::geometric_templates(forcing_templates(), 0.5);
}

auto ConnectorInstance::oracle(int n) const -> CpwlCurve {
  if (n < 0) throw precondition_error{"oracle: n must be >= 0"};
  if (std::pow(static_cast<double>(ell), n) * 2.0 > static_cast<double>(oracle_cap()))
    throw precondition_error{"oracle: stage exceeds the breakpoint budget"};
  std::vector<double> ts{0.0, 1.0};
  std::vector<Vec> vs{start(0), end(0)};
  const int m = M();
  for (int s = 0; s < n; ++s) {
    std::vector<double> nt;
    std::vector<Vec> nv;
    for (int j = 0; j < ell; ++j)
      for (std::size_t k = 0; k < ts.size(); ++k) {
        nt.push_back((ts[k] + 2.0 * j) / m);
        nv.push_back(A[static_cast<std::size_t>(j)] * vs[k] + u[static_cast<std::size_t>(j)]);
      }
    ts = std::move(nt);
    vs = std::move(nv);
  }
  return polyline_curve(ts, vs, 1);
}

auto hilbert_connector_instance() -> ConnectorInstance {
  ConnectorInstance c;
  c.name = "hilbert";
  c.p = 2;
  c.ell = 4;
  c.A = {mat2(0, 0.5, 0.5, 0), mat2(0.5, 0, 0, 0.5), mat2(0.5, 0, 0, 0.5), mat2(0, -0.5, -0.5, 0)};
  c.u = {vec2(0, 0), vec2(0, 0.5), vec2(0.5, 0.5), vec2(1, 0.5)};
  c.a0 = vec2(0, 0);
  c.a1 = vec2(0.5, 0.5);
  c.b0 = vec2(1, 0);
  c.b1 = vec2(-0.5, 0.5);
  return c;
}

auto morton_instance(int p) -> ConnectorInstance {
  if (p < 1 || p > 3) throw precondition_error{"morton: p must lie in [1, 3]"};
  ConnectorInstance c;
  c.name = "morton";
  c.p = p;
  c.ell = 1 << p;
  for (int r = 0; r < c.ell; ++r) {
    c.A.push_back(0.5 * Mat::Identity(p, p));
    Vec u(p);
    // first coordinate carries the most significant bit
    for (int i = 0; i < p; ++i) u[i] = 0.5 * ((r >> (p - 1 - i)) & 1);
    c.u.push_back(u);
  }
  c.a0 = Vec::Zero(p);
  c.a1 = Vec::Constant(p, 0.5);
  c.b0 = Vec::Ones(p);
  c.b1 = Vec::Constant(p, -0.5);
  return c;
}

auto compile_connector(const ConnectorInstance& inst, int n, const LoopConfig& base) -> CompiledIterate {
  const auto defect = compile_affine(inst.defect_op(), CpwlCurve::zero(inst.p, 1), inst.schedule(), n, base);
  const int p = inst.p;
  Mat sum(p, 2 * p);
  sum << Mat::Identity(p, p), Mat::Identity(p, p);
  auto net = post_affine(parallel_shared({defect.net, lower_curve(inst.anchor(n))}), sum, Vec::Zero(p));
  const auto stats = net_stats(net);
  return CompiledIterate{std::move(net), n, "affine", inst.name + " " + defect.params, stats};
}

auto gallery_stage_cap(const std::string& name) -> int {
  static const std::map<std::string, int> caps{{"koch", 4},  {"levy", 8},   {"heighway", 8},  {"hilbert_type", 4},
                                               {"hilbert", 5}, {"gosper", 3}, {"morton", 3}, {"hilbert_rp", 3}};
  const auto it = caps.find(name);
  if (it == caps.end()) throw precondition_error{"unknown gallery instance '" + name + "'"};
  return it->second;
}

auto gallery_names() -> const std::vector<std::string>& {
  static const std::vector<std::string> names{"koch",    "levy",   "heighway", "hilbert_type",
                                              "hilbert", "gosper", "morton",   "hilbert_rp"};
  return names;
}

}  // namespace refinet
