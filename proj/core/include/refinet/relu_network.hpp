#pragma once

#include "refinet/cpwl.hpp"

#include <Eigen/Sparse>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace refinet {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class activation { relu, linear };

struct Layer {
  SpMat W;  // out x in
  Vec b;
  activation act;
};

// Feedforward net of affine layers; every layer but the last applies ReLU.
// Weights are binary64; evaluation accumulates in long double.
class ReluNetwork {
 public:
  explicit ReluNetwork(int input_dim, std::vector<Layer> layers = {});

  static auto identity(int dim) -> ReluNetwork;

  auto input_dim() const noexcept -> int { return input_dim_; }
  auto output_dim() const noexcept -> int;
  auto layers() const noexcept -> const std::vector<Layer>& { return layers_; }

  auto operator()(const Vec& x) const -> Vec;
  auto eval_ld(const std::vector<long double>& x) const -> std::vector<long double>;
  auto eval_scalar(double t) const -> Vec;

  auto depth() const noexcept -> int;
  auto width() const noexcept -> int;
  auto coeff_max() const noexcept -> double;
  auto nonzeros() const noexcept -> long long;

 private:
  int input_dim_;
  std::vector<Layer> layers_;
};

struct NetStats {
  int width;
  int depth;
  double coeff_max;
  int layer_count;
};

auto net_stats(const ReluNetwork& net) -> NetStats;
inline auto eval_net(const ReluNetwork& net, const Vec& x) -> Vec { return net(x); }

enum class channel_sign { nonnegative, general };

// b after a.
auto serial(const ReluNetwork& a, const ReluNetwork& b) -> ReluNetwork;
// Inputs split into consecutive slices, outputs concatenated. Shorter nets are
// padded with general passthrough layers.
auto parallel(const ReluNetwork& a, const ReluNetwork& b) -> ReluNetwork;
auto parallel(const std::vector<ReluNetwork>& nets) -> ReluNetwork;
// All nets read the same input.
auto parallel_shared(const std::vector<ReluNetwork>& nets) -> ReluNetwork;
// x -> net(W x + b)
auto pre_affine(const ReluNetwork& net, const Mat& W, const Vec& b) -> ReluNetwork;
// x -> W net(x) + b
auto post_affine(const ReluNetwork& net, const Mat& W, const Vec& b) -> ReluNetwork;
auto pre_affine(const ReluNetwork& net, const SpMat& W, const Vec& b) -> ReluNetwork;
auto post_affine(const ReluNetwork& net, const SpMat& W, const Vec& b) -> ReluNetwork;

// One relu layer reproducing its input (nonnegative inputs use one unit each).
auto passthrough(int dim, channel_sign sign) -> ReluNetwork;
// `depth` relu layers reproducing the input.
auto delay(int dim, int depth, channel_sign sign) -> ReluNetwork;
// Append passthrough layers so that depth(net) == depth.
auto pad_to_depth(const ReluNetwork& net, int depth, channel_sign sign = channel_sign::general) -> ReluNetwork;

// min(u, v) and max(u, v) on R^2.
auto min_gadget() -> ReluNetwork;
auto max_gadget() -> ReluNetwork;

// One hidden layer: ReLU(t), ReLU(-t), ReLU(t - t_i) for the merged breakpoints.
auto lower_scalar_cpwl(const ScalarCpwl& f) -> ReluNetwork;
auto lower_cpwl(const std::vector<ScalarCpwl>& fs) -> ReluNetwork;
auto lower_curve(const CpwlCurve& c) -> ReluNetwork;

// max_i min_{j in sets[i]} (P_j x + c_j)
auto max_min_network(const Mat& P, const Vec& c, const std::vector<std::vector<int>>& sets) -> ReluNetwork;

// Merge duplicate relu units and drop units that never reach the output.
auto compact(const ReluNetwork& net) -> ReluNetwork;

using Point2 = Eigen::Vector2d;

struct PlanarCpwlField {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  Mat values;         // vertices x d_out
  double snap = 0.0;  // > 0: round piece coefficients to this grid when within roundoff

  auto d_out() const noexcept -> int { return static_cast<int>(values.cols()); }
  auto interpolate(const Point2& z) const -> std::optional<Vec>;
  void validate() const;
};

struct AffinePiece {
  double gx;
  double gy;
  double c;
};

struct LatticeForm {
  std::vector<AffinePiece> pieces;
  std::vector<std::vector<int>> sets;
  auto operator()(long double x, long double y) const -> long double;
};

auto lattice_form(const PlanarCpwlField& field, int component) -> LatticeForm;
auto lower_planar_field(const PlanarCpwlField& field) -> ReluNetwork;

}  // namespace refinet
