#include "refinet/relu_network.hpp"

#include "refinet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace refinet {

namespace {

auto to_sparse(const Mat& m) -> SpMat {
  SpMat s = m.sparseView(0.0, 0.0);
  s.makeCompressed();
  return s;
}

auto identity_sp(int n) -> SpMat {
  SpMat s(n, n);
  s.setIdentity();
  s.makeCompressed();
  return s;
}

auto vstack(const SpMat& a, const SpMat& b) -> SpMat {
  if (a.cols() != b.cols()) throw structural_error{"vstack: column mismatch"};
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros() + b.nonZeros()));
  for (int r = 0; r < a.outerSize(); ++r)
    for (SpMat::InnerIterator it(a, r); it; ++it) trips.emplace_back(r, it.col(), it.value());
  for (int r = 0; r < b.outerSize(); ++r)
    for (SpMat::InnerIterator it(b, r); it; ++it) trips.emplace_back(a.rows() + r, it.col(), it.value());
  SpMat s(a.rows() + b.rows(), a.cols());
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

auto block_diag(const std::vector<const SpMat*>& ms) -> SpMat {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t nnz = 0;
  for (const auto* m : ms) {
    rows += m->rows();
    cols += m->cols();
    nnz += static_cast<std::size_t>(m->nonZeros());
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  Eigen::Index r0 = 0;
  Eigen::Index c0 = 0;
  for (const auto* m : ms) {
    for (int r = 0; r < m->outerSize(); ++r)
      for (SpMat::InnerIterator it(*m, r); it; ++it)
        trips.emplace_back(static_cast<int>(r0 + r), static_cast<int>(c0 + it.col()), it.value());
    r0 += m->rows();
    c0 += m->cols();
  }
  SpMat s(rows, cols);
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

auto product(const SpMat& a, const SpMat& b) -> SpMat {
  SpMat s = (a * b).pruned(0.0);
  s.makeCompressed();
  return s;
}

struct Canon {
  int input_dim;
  std::vector<Layer> hidden;
  Layer out;
};

auto canonical(const ReluNetwork& net) -> Canon {
  Canon c{net.input_dim(), {}, {}};
  const auto& ls = net.layers();
  if (ls.empty() || ls.back().act == activation::relu) {
    c.hidden = ls;
    const int d = net.output_dim();
    c.out = Layer{identity_sp(d), Vec::Zero(d), activation::linear};
  } else {
    c.hidden.assign(ls.begin(), ls.end() - 1);
    c.out = ls.back();
  }
  return c;
}

auto from_canon(Canon c) -> ReluNetwork {
  auto layers = std::move(c.hidden);
  layers.push_back(std::move(c.out));
  return ReluNetwork{c.input_dim, std::move(layers)};
}

auto pad(Canon c, int depth, channel_sign sign) -> Canon {
  const int k0 = static_cast<int>(c.hidden.size());
  if (depth <= k0) return c;
  const int d = static_cast<int>(c.out.W.rows());
  if (sign == channel_sign::general) {
    SpMat neg = -c.out.W;
    Vec b2(2 * d);
    b2 << c.out.b, -c.out.b;
    c.hidden.push_back(Layer{vstack(c.out.W, neg), b2, activation::relu});
    for (int i = k0 + 1; i < depth; ++i) c.hidden.push_back(Layer{identity_sp(2 * d), Vec::Zero(2 * d), activation::relu});
    SpMat out(d, 2 * d);
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < d; ++i) {
      t.emplace_back(i, i, 1.0);
      t.emplace_back(i, d + i, -1.0);
    }
    out.setFromTriplets(t.begin(), t.end());
    out.makeCompressed();
    c.out = Layer{out, Vec::Zero(d), activation::linear};
  } else {
    c.hidden.push_back(Layer{c.out.W, c.out.b, activation::relu});
    for (int i = k0 + 1; i < depth; ++i) c.hidden.push_back(Layer{identity_sp(d), Vec::Zero(d), activation::relu});
    c.out = Layer{identity_sp(d), Vec::Zero(d), activation::linear};
  }
  return c;
}

}  // namespace

ReluNetwork::ReluNetwork(int input_dim, std::vector<Layer> layers) : input_dim_{input_dim}, layers_{std::move(layers)} {
  if (input_dim_ < 0) throw structural_error{"network input dimension must be >= 0"};
  Eigen::Index d = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    if (l.W.cols() != d)
      throw structural_error{"layer " + std::to_string(i) + ": expected " + std::to_string(d) + " inputs, got " +
                             std::to_string(l.W.cols())};
    if (l.b.size() != l.W.rows()) throw structural_error{"layer " + std::to_string(i) + ": bias size mismatch"};
    if (l.act == activation::linear && i + 1 != layers_.size())
      throw structural_error{"only the final layer may be linear"};
    l.W.makeCompressed();
    d = l.W.rows();
  }
}

auto ReluNetwork::identity(int dim) -> ReluNetwork { return ReluNetwork{dim}; }

auto ReluNetwork::output_dim() const noexcept -> int {
  return layers_.empty() ? input_dim_ : static_cast<int>(layers_.back().W.rows());
}

auto ReluNetwork::eval_ld(const std::vector<long double>& x) const -> std::vector<long double> {
  if (static_cast<int>(x.size()) != input_dim_)
    throw structural_error{"eval: input has dimension " + std::to_string(x.size()) + ", network expects " +
                           std::to_string(input_dim_)};
  std::vector<long double> cur = x;
  std::vector<long double> next;
  for (const auto& l : layers_) {
    const auto rows = l.W.rows();
    next.assign(static_cast<std::size_t>(rows), 0.0L);
    const auto* outer = l.W.outerIndexPtr();
    const auto* inner = l.W.innerIndexPtr();
    const auto* val = l.W.valuePtr();
    for (Eigen::Index r = 0; r < rows; ++r) {
      long double acc = l.b[r];
      for (auto k = outer[r]; k < outer[r + 1]; ++k) acc += static_cast<long double>(val[k]) * cur[static_cast<std::size_t>(inner[k])];
      if (l.act == activation::relu && acc < 0.0L) acc = 0.0L;
      next[static_cast<std::size_t>(r)] = acc;
    }
    cur.swap(next);
  }
  return cur;
}

auto ReluNetwork::operator()(const Vec& x) const -> Vec {
  std::vector<long double> in(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) in[static_cast<std::size_t>(i)] = x[i];
  const auto out = eval_ld(in);
  Vec y(static_cast<Eigen::Index>(out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) y[static_cast<Eigen::Index>(i)] = static_cast<double>(out[i]);
  return y;
}

auto ReluNetwork::eval_scalar(double t) const -> Vec {
  Vec x(1);
  x[0] = t;
  return (*this)(x);
}

auto ReluNetwork::depth() const noexcept -> int {
  return static_cast<int>(std::count_if(layers_.begin(), layers_.end(),
                                        [](const Layer& l) { return l.act == activation::relu; }));
}

auto ReluNetwork::width() const noexcept -> int {
  int w = 0;
  for (const auto& l : layers_) w = std::max(w, static_cast<int>(l.W.rows()));
  return w;
}

auto ReluNetwork::coeff_max() const noexcept -> double {
  double m = 0.0;
  for (const auto& l : layers_) {
    for (Eigen::Index k = 0; k < l.W.nonZeros(); ++k) m = std::max(m, std::abs(l.W.valuePtr()[k]));
    if (l.b.size() > 0) m = std::max(m, l.b.cwiseAbs().maxCoeff());
  }
  return m;
}

auto ReluNetwork::nonzeros() const noexcept -> long long {
  long long n = 0;
  for (const auto& l : layers_) n += l.W.nonZeros();
  return n;
}

auto net_stats(const ReluNetwork& net) -> NetStats {
  return {net.width(), net.depth(), net.coeff_max(), static_cast<int>(net.layers().size())};
}

auto serial(const ReluNetwork& a, const ReluNetwork& b) -> ReluNetwork {
  if (a.output_dim() != b.input_dim())
    throw structural_error{"serial: output " + std::to_string(a.output_dim()) + " does not feed input " +
                           std::to_string(b.input_dim())};
  if (b.layers().empty()) return a;
  auto ca = canonical(a);
  const auto& first = b.layers().front();
  std::vector<Layer> layers = std::move(ca.hidden);
  layers.push_back(Layer{product(first.W, ca.out.W), first.W * ca.out.b + first.b, first.act});
  layers.insert(layers.end(), b.layers().begin() + 1, b.layers().end());
  return ReluNetwork{a.input_dim(), std::move(layers)};
}

auto parallel(const std::vector<ReluNetwork>& nets) -> ReluNetwork {
  if (nets.empty()) throw structural_error{"parallel: no networks"};
  int depth = 0;
  for (const auto& n : nets) depth = std::max(depth, n.depth());
  std::vector<Canon> cs;
  int in = 0;
  for (const auto& n : nets) {
    cs.push_back(pad(canonical(n), depth, channel_sign::general));
    in += n.input_dim();
  }
  std::vector<Layer> layers;
  for (int k = 0; k <= depth; ++k) {
    std::vector<const SpMat*> ws;
    Eigen::Index rows = 0;
    for (const auto& c : cs) {
      const auto& l = k < depth ? c.hidden[static_cast<std::size_t>(k)] : c.out;
      ws.push_back(&l.W);
      rows += l.b.size();
    }
    Vec b(rows);
    Eigen::Index r = 0;
    for (const auto& c : cs) {
      const auto& l = k < depth ? c.hidden[static_cast<std::size_t>(k)] : c.out;
      b.segment(r, l.b.size()) = l.b;
      r += l.b.size();
    }
    layers.push_back(Layer{block_diag(ws), b, k < depth ? activation::relu : activation::linear});
  }
  return ReluNetwork{in, std::move(layers)};
}

auto parallel(const ReluNetwork& a, const ReluNetwork& b) -> ReluNetwork { return parallel(std::vector{a, b}); }

auto parallel_shared(const std::vector<ReluNetwork>& nets) -> ReluNetwork {
  if (nets.empty()) throw structural_error{"parallel_shared: no networks"};
  const int d = nets.front().input_dim();
  std::vector<Eigen::Triplet<double>> t;
  int row = 0;
  for (const auto& n : nets) {
    if (n.input_dim() != d) throw structural_error{"parallel_shared: input dimensions differ"};
    for (int i = 0; i < d; ++i) t.emplace_back(row + i, i, 1.0);
    row += d;
  }
  SpMat fan(row, d);
  fan.setFromTriplets(t.begin(), t.end());
  return pre_affine(parallel(nets), fan, Vec::Zero(row));
}

auto pre_affine(const ReluNetwork& net, const SpMat& W, const Vec& b) -> ReluNetwork {
  if (W.rows() != net.input_dim() || b.size() != W.rows()) throw structural_error{"pre_affine: dimension mismatch"};
  if (net.layers().empty()) {
    SpMat w = W;
    w.makeCompressed();
    return ReluNetwork{static_cast<int>(W.cols()), {Layer{w, b, activation::linear}}};
  }
  std::vector<Layer> layers = net.layers();
  auto& first = layers.front();
  first.b = first.W * b + first.b;
  first.W = product(first.W, W);
  return ReluNetwork{static_cast<int>(W.cols()), std::move(layers)};
}

auto post_affine(const ReluNetwork& net, const SpMat& W, const Vec& b) -> ReluNetwork {
  if (W.cols() != net.output_dim() || b.size() != W.rows()) throw structural_error{"post_affine: dimension mismatch"};
  auto c = canonical(net);
  c.out.b = W * c.out.b + b;
  c.out.W = product(W, c.out.W);
  return from_canon(std::move(c));
}

auto pre_affine(const ReluNetwork& net, const Mat& W, const Vec& b) -> ReluNetwork {
  return pre_affine(net, to_sparse(W), b);
}

auto post_affine(const ReluNetwork& net, const Mat& W, const Vec& b) -> ReluNetwork {
  return post_affine(net, to_sparse(W), b);
}

auto passthrough(int dim, channel_sign sign) -> ReluNetwork { return delay(dim, 1, sign); }

auto delay(int dim, int depth, channel_sign sign) -> ReluNetwork {
  return from_canon(pad(canonical(ReluNetwork::identity(dim)), depth, sign));
}

auto pad_to_depth(const ReluNetwork& net, int depth, channel_sign sign) -> ReluNetwork {
  if (net.depth() >= depth) return net;
  return from_canon(pad(canonical(net), depth, sign));
}

auto min_gadget() -> ReluNetwork {
  // min(u,v) = v - ReLU(v - u)
  Mat W1(3, 2);
  W1 << -1, 1, 0, 1, 0, -1;
  Mat W2(1, 3);
  W2 << -1, 1, -1;
  return ReluNetwork{2, {Layer{to_sparse(W1), Vec::Zero(3), activation::relu}, Layer{to_sparse(W2), Vec::Zero(1), activation::linear}}};
}

auto max_gadget() -> ReluNetwork {
  // max(u,v) = v + ReLU(u - v)
  Mat W1(3, 2);
  W1 << 1, -1, 0, 1, 0, -1;
  Mat W2(1, 3);
  W2 << 1, 1, -1;
  return ReluNetwork{2, {Layer{to_sparse(W1), Vec::Zero(3), activation::relu}, Layer{to_sparse(W2), Vec::Zero(1), activation::linear}}};
}

auto lower_cpwl(const std::vector<ScalarCpwl>& fs) -> ReluNetwork {
  if (fs.empty()) throw structural_error{"lower_cpwl: no functions"};
  std::vector<const ScalarCpwl*> ptrs;
  for (const auto& f : fs) ptrs.push_back(&f);
  const auto u = merged_grid(ptrs);
  const int n = static_cast<int>(u.size());
  const int units = n + 2;
  // units: ReLU(t), ReLU(-t), ReLU(t - u_i)
  std::vector<Eigen::Triplet<double>> t1;
  Vec b1(units);
  t1.emplace_back(0, 0, 1.0);
  t1.emplace_back(1, 0, -1.0);
  b1[0] = b1[1] = 0.0;
  for (int i = 0; i < n; ++i) {
    t1.emplace_back(2 + i, 0, 1.0);
    b1[2 + i] = -u[static_cast<std::size_t>(i)];
  }
  SpMat W1(units, 1);
  W1.setFromTriplets(t1.begin(), t1.end());
  const int m = static_cast<int>(fs.size());
  std::vector<Eigen::Triplet<double>> t2;
  Vec b2(m);
  for (int k = 0; k < m; ++k) {
    const auto& f = fs[static_cast<std::size_t>(k)];
    b2[k] = f.left_tail();
    double prev = 0.0;
    for (int i = 0; i < n; ++i) {
      const double slope = i + 1 < n ? (f(u[static_cast<std::size_t>(i) + 1]) - f(u[static_cast<std::size_t>(i)])) /
                                           (u[static_cast<std::size_t>(i) + 1] - u[static_cast<std::size_t>(i)])
                                     : 0.0;
      const double beta = slope - prev;
      if (beta != 0.0) t2.emplace_back(k, 2 + i, beta);
      prev = slope;
    }
  }
  SpMat W2(m, units);
  W2.setFromTriplets(t2.begin(), t2.end());
  return ReluNetwork{1, {Layer{W1, b1, activation::relu}, Layer{W2, b2, activation::linear}}};
}

auto lower_scalar_cpwl(const ScalarCpwl& f) -> ReluNetwork { return lower_cpwl({f}); }

auto lower_curve(const CpwlCurve& c) -> ReluNetwork { return lower_cpwl(c.components()); }

auto max_min_network(const Mat& P, const Vec& c, const std::vector<std::vector<int>>& sets) -> ReluNetwork {
  if (sets.empty()) throw structural_error{"max_min_network: no sets"};
  const int d = static_cast<int>(P.cols());
  // current values = Vm * (previous layer output) + vb
  SpMat Vm = to_sparse(P);
  Vec vb = c;
  std::vector<Layer> layers;
  const bool trivial = std::all_of(sets.begin(), sets.end(), [](const auto& s) { return s.size() == 1; }) &&
                       sets.size() == 1;
  if (!trivial) {
    // each piece is rounded once and then only combined with +-1 weights;
    // otherwise differences of steep pieces are rounded separately and do not cancel
    const int np = static_cast<int>(P.rows());
    Mat PP(2 * np, d);
    PP << P, -P;
    Vec cc(2 * np);
    cc << c, -c;
    layers.push_back(Layer{to_sparse(PP), cc, activation::relu});
    std::vector<Eigen::Triplet<double>> it;
    for (int k = 0; k < np; ++k) {
      it.emplace_back(k, k, 1.0);
      it.emplace_back(k, np + k, -1.0);
    }
    Vm = SpMat(np, 2 * np);
    Vm.setFromTriplets(it.begin(), it.end());
    Vm.makeCompressed();
    vb = Vec::Zero(np);
  }

  auto reduce = [&](std::vector<std::vector<int>> groups, bool is_min) -> std::vector<int> {
    auto done = [&] {
      return std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.size() == 1; });
    };
    while (!done()) {
      const int nv = static_cast<int>(Vm.rows());
      std::vector<Eigen::Triplet<double>> ut;  // units over values
      int units = 0;
      std::map<int, std::pair<int, int>> pass;  // value -> (unit+, unit-)
      auto pass_of = [&](int v) {
        auto it = pass.find(v);
        if (it != pass.end()) return it->second;
        ut.emplace_back(units, v, 1.0);
        ut.emplace_back(units + 1, v, -1.0);
        auto pr = std::make_pair(units, units + 1);
        units += 2;
        pass.emplace(v, pr);
        return pr;
      };
      std::vector<std::vector<std::pair<int, double>>> new_vals;  // over units
      std::vector<std::vector<int>> next_groups;
      for (const auto& g : groups) {
        std::vector<int> ng;
        std::size_t i = 0;
        for (; i + 1 < g.size(); i += 2) {
          const int u = g[i];
          const int v = g[i + 1];
          const int du = units++;
          // min: v - ReLU(v - u); max: v + ReLU(u - v)
          ut.emplace_back(du, v, is_min ? 1.0 : -1.0);
          ut.emplace_back(du, u, is_min ? -1.0 : 1.0);
          auto [pp, pm] = pass_of(v);
          new_vals.push_back({{pp, 1.0}, {pm, -1.0}, {du, is_min ? -1.0 : 1.0}});
          ng.push_back(static_cast<int>(new_vals.size()) - 1);
        }
        if (i < g.size()) {
          auto [pp, pm] = pass_of(g[i]);
          new_vals.push_back({{pp, 1.0}, {pm, -1.0}});
          ng.push_back(static_cast<int>(new_vals.size()) - 1);
        }
        next_groups.push_back(std::move(ng));
      }
      SpMat U(units, nv);
      U.setFromTriplets(ut.begin(), ut.end());
      layers.push_back(Layer{product(U, Vm), U * vb, activation::relu});
      std::vector<Eigen::Triplet<double>> vt;
      for (std::size_t k = 0; k < new_vals.size(); ++k)
        for (auto [col, w] : new_vals[k]) vt.emplace_back(static_cast<int>(k), col, w);
      SpMat V(static_cast<Eigen::Index>(new_vals.size()), units);
      V.setFromTriplets(vt.begin(), vt.end());
      V.makeCompressed();
      Vm = V;
      vb = Vec::Zero(V.rows());
      groups = std::move(next_groups);
    }
    std::vector<int> out;
    for (const auto& g : groups) out.push_back(g.front());
    return out;
  };

  const auto mins = reduce(sets, true);
  const auto top = reduce({mins}, false);
  // select the final value
  SpMat sel(1, Vm.rows());
  sel.insert(0, top.front()) = 1.0;
  layers.push_back(Layer{product(sel, Vm), sel * vb, activation::linear});
  return ReluNetwork{d, std::move(layers)};
}

auto compact(const ReluNetwork& net) -> ReluNetwork {
  auto layers = net.layers();
  for (std::size_t li = 0; li + 1 < layers.size(); ++li) {
    auto& cur = layers[li];
    auto& nxt = layers[li + 1];
    if (cur.act != activation::relu) break;
    const int rows = static_cast<int>(cur.W.rows());
    // usage of each unit in the next layer
    Mat used = Mat::Zero(1, rows);
    SpMat nxt_cm = nxt.W;
    for (int r = 0; r < nxt.W.outerSize(); ++r)
      for (SpMat::InnerIterator it(nxt.W, r); it; ++it) used(0, it.col()) = 1.0;
    using RowKey = std::pair<std::vector<std::pair<int, double>>, double>;
    std::map<RowKey, int> seen;
    std::vector<int> target(static_cast<std::size_t>(rows), -1);  // new index, -1 dropped
    Vec const_contrib = Vec::Zero(nxt.W.rows());
    std::vector<int> keep;
    std::vector<double> col_const(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
      RowKey key;
      for (SpMat::InnerIterator it(cur.W, r); it; ++it) key.first.emplace_back(static_cast<int>(it.col()), it.value());
      key.second = cur.b[r];
      if (used(0, r) == 0.0) continue;
      if (key.first.empty()) {
        col_const[static_cast<std::size_t>(r)] = std::max(0.0, key.second);
        continue;
      }
      auto it = seen.find(key);
      if (it != seen.end()) {
        target[static_cast<std::size_t>(r)] = it->second;
      } else {
        const int idx = static_cast<int>(keep.size());
        seen.emplace(std::move(key), idx);
        target[static_cast<std::size_t>(r)] = idx;
        keep.push_back(r);
      }
    }
    if (static_cast<int>(keep.size()) == rows) continue;
    std::vector<Eigen::Triplet<double>> tw;
    Vec nb(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      for (SpMat::InnerIterator it(cur.W, keep[k]); it; ++it) tw.emplace_back(static_cast<int>(k), it.col(), it.value());
      nb[static_cast<Eigen::Index>(k)] = cur.b[keep[k]];
    }
    SpMat nw(static_cast<Eigen::Index>(keep.size()), cur.W.cols());
    nw.setFromTriplets(tw.begin(), tw.end());
    nw.makeCompressed();
    std::vector<Eigen::Triplet<double>> tn;
    Vec nxt_b = nxt.b;
    for (int r = 0; r < nxt.W.outerSize(); ++r) {
      for (SpMat::InnerIterator it(nxt.W, r); it; ++it) {
        const auto col = static_cast<std::size_t>(it.col());
        if (target[col] >= 0) {
          tn.emplace_back(r, target[col], it.value());
        } else if (col_const[col] != 0.0) {
          nxt_b[r] += it.value() * col_const[col];
        }
      }
    }
    SpMat nn(nxt.W.rows(), static_cast<Eigen::Index>(keep.size()));
    nn.setFromTriplets(tn.begin(), tn.end());  // duplicates are summed
    nn.makeCompressed();
    cur = Layer{nw, nb, activation::relu};
    nxt = Layer{nn, nxt_b, nxt.act};
  }
  return ReluNetwork{net.input_dim(), std::move(layers)};
}

auto PlanarCpwlField::interpolate(const Point2& z) const -> std::optional<Vec> {
  for (const auto& tri : triangles) {
    const Point2& a = vertices[static_cast<std::size_t>(tri[0])];
    const Point2& b = vertices[static_cast<std::size_t>(tri[1])];
    const Point2& c = vertices[static_cast<std::size_t>(tri[2])];
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    const double l1 = ((z.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (z.y() - a.y())) / det;
    const double l2 = ((b.x() - a.x()) * (z.y() - a.y()) - (z.x() - a.x()) * (b.y() - a.y())) / det;
    const double l0 = 1.0 - l1 - l2;
    constexpr double eps = 1e-12;
    if (l0 >= -eps && l1 >= -eps && l2 >= -eps) {
      Vec v = l0 * values.row(tri[0]).transpose() + l1 * values.row(tri[1]).transpose() +
              l2 * values.row(tri[2]).transpose();
      return v;
    }
  }
  return std::nullopt;
}

void PlanarCpwlField::validate() const {
  if (values.rows() != static_cast<Eigen::Index>(vertices.size()))
    throw structural_error{"planar field: one value row per vertex required"};
  if (triangles.empty()) throw structural_error{"planar field: no triangles"};
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const auto& tri = triangles[i];
    for (int k : tri)
      if (k < 0 || k >= static_cast<int>(vertices.size()))
        throw structural_error{"planar field: triangle " + std::to_string(i) + " has a bad vertex index"};
    const Point2& a = vertices[static_cast<std::size_t>(tri[0])];
    const Point2& b = vertices[static_cast<std::size_t>(tri[1])];
    const Point2& c = vertices[static_cast<std::size_t>(tri[2])];
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (!(std::abs(det) > 1e-14)) throw structural_error{"planar field: triangle " + std::to_string(i) + " is degenerate"};
  }
}

auto LatticeForm::operator()(long double x, long double y) const -> long double {
  long double best = 0.0L;
  bool first = true;
  for (const auto& s : sets) {
    long double lo = 0.0L;
    bool f2 = true;
    for (int j : s) {
      const auto& p = pieces[static_cast<std::size_t>(j)];
      const long double v = p.gx * x + p.gy * y + p.c;
      if (f2 || v < lo) lo = v;
      f2 = false;
    }
    if (first || lo > best) best = lo;
    first = false;
  }
  return best;
}

namespace {

auto snap_to(double v, double grid) -> double {
  if (grid <= 0.0) return v;
  const double r = std::round(v / grid) * grid;
  return std::abs(r - v) <= 1e-9 * std::max(1.0, std::abs(v)) ? r : v;
}

}  // namespace

auto lattice_form(const PlanarCpwlField& field, int component) -> LatticeForm {
  field.validate();
  LatticeForm lf;
  std::vector<int> piece_of;
  std::vector<double> piece_area;
  double scale = 1.0;
  for (const auto& tri : field.triangles) {
    const Point2& a = field.vertices[static_cast<std::size_t>(tri[0])];
    const Point2& b = field.vertices[static_cast<std::size_t>(tri[1])];
    const Point2& c = field.vertices[static_cast<std::size_t>(tri[2])];
    const long double fa = field.values(tri[0], component);
    const long double fb = field.values(tri[1], component);
    const long double fc = field.values(tri[2], component);
    const long double x1 = b.x() - a.x(), y1 = b.y() - a.y();
    const long double x2 = c.x() - a.x(), y2 = c.y() - a.y();
    const long double det = x1 * y2 - x2 * y1;
    const long double gx = ((fb - fa) * y2 - (fc - fa) * y1) / det;
    const long double gy = ((fc - fa) * x1 - (fb - fa) * x2) / det;
    const long double cc = fa - gx * a.x() - gy * a.y();
    AffinePiece p{snap_to(static_cast<double>(gx), field.snap), snap_to(static_cast<double>(gy), field.snap),
                  snap_to(static_cast<double>(cc), field.snap)};
    scale = std::max({scale, std::abs(p.gx), std::abs(p.gy), std::abs(p.c)});
    // one plane seen from several triangles: keep the copy from the widest one,
    // thin triangles determine their plane only to ~ulp / width
    const double area = std::abs(static_cast<double>(det));
    int idx = -1;
    for (std::size_t k = 0; k < lf.pieces.size(); ++k) {
      const auto& q = lf.pieces[k];
      const double tol = 1e-9 * std::max({1.0, std::abs(q.gx), std::abs(q.gy), std::abs(q.c), std::abs(p.gx),
                                          std::abs(p.gy), std::abs(p.c)});
      if (std::abs(q.gx - p.gx) <= tol && std::abs(q.gy - p.gy) <= tol && std::abs(q.c - p.c) <= tol) {
        idx = static_cast<int>(k);
        if (area > piece_area[k]) {
          lf.pieces[k] = p;
          piece_area[k] = area;
        }
        break;
      }
    }
    if (idx < 0) {
      idx = static_cast<int>(lf.pieces.size());
      lf.pieces.push_back(p);
      piece_area.push_back(area);
    }
    piece_of.push_back(idx);
  }
  // S_i = { j : l_j >= l_i on triangle i }, up to roundoff of the two pieces
  auto norm1 = [](const AffinePiece& p) { return std::abs(p.gx) + std::abs(p.gy) + std::abs(p.c); };
  std::vector<std::vector<int>> sets;
  for (std::size_t t = 0; t < field.triangles.size(); ++t) {
    const auto& pi = lf.pieces[static_cast<std::size_t>(piece_of[t])];
    std::vector<int> s;
    for (std::size_t j = 0; j < lf.pieces.size(); ++j) {
      const auto& pj = lf.pieces[j];
      bool ok = true;
      for (int v : field.triangles[t]) {
        const Point2& z = field.vertices[static_cast<std::size_t>(v)];
        const long double d = (static_cast<long double>(pj.gx) - pi.gx) * z.x() +
                              (static_cast<long double>(pj.gy) - pi.gy) * z.y() + (static_cast<long double>(pj.c) - pi.c);
        if (d < -1e-12 * (1.0 + norm1(pi) + norm1(pj))) {
          ok = false;
          break;
        }
      }
      if (ok) s.push_back(static_cast<int>(j));
    }
    sets.push_back(std::move(s));
  }
  std::sort(sets.begin(), sets.end());
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  // a superset has a smaller min and never wins the max
  for (const auto& s : sets) {
    bool dominated = false;
    for (const auto& o : sets) {
      if (&o == &s || o.size() >= s.size()) continue;
      if (std::includes(s.begin(), s.end(), o.begin(), o.end())) {
        dominated = true;
        break;
      }
    }
    if (!dominated) lf.sets.push_back(s);
  }
  // check the representation on the complex
  auto check = [&](const Point2& z) {
    const auto ref = field.interpolate(z);
    if (!ref) return;
    const long double got = lf(z.x(), z.y());
    if (std::abs(static_cast<double>(got) - (*ref)[component]) > 1e-7 * scale) {
      throw structural_error{"lattice form does not reproduce the planar field at (" + std::to_string(z.x()) + ", " +
                             std::to_string(z.y()) + "): " + std::to_string(static_cast<double>(got)) + " vs " +
                             std::to_string((*ref)[component])};
    }
  };
  for (const auto& tri : field.triangles) {
    const Point2& a = field.vertices[static_cast<std::size_t>(tri[0])];
    const Point2& b = field.vertices[static_cast<std::size_t>(tri[1])];
    const Point2& c = field.vertices[static_cast<std::size_t>(tri[2])];
    check(a);
    check(b);
    check(c);
    check(0.5 * (a + b));
    check(0.5 * (b + c));
    check(0.5 * (a + c));
    check((a + b + c) / 3.0);
  }
  return lf;
}

auto lower_planar_field(const PlanarCpwlField& field) -> ReluNetwork {
  std::vector<ReluNetwork> comps;
  for (int k = 0; k < field.d_out(); ++k) {
    const auto lf = lattice_form(field, k);
    Mat P(static_cast<Eigen::Index>(lf.pieces.size()), 2);
    Vec c(static_cast<Eigen::Index>(lf.pieces.size()));
    for (std::size_t j = 0; j < lf.pieces.size(); ++j) {
      P(static_cast<Eigen::Index>(j), 0) = lf.pieces[j].gx;
      P(static_cast<Eigen::Index>(j), 1) = lf.pieces[j].gy;
      c[static_cast<Eigen::Index>(j)] = lf.pieces[j].c;
    }
    comps.push_back(max_min_network(P, c, lf.sets));
  }
  return compact(parallel_shared(comps));
}

}  // namespace refinet
