#pragma once

#include "refinet/cpwl.hpp"
#include "refinet/reductions.hpp"
#include "refinet/refinement.hpp"
#include "refinet/relu_network.hpp"

#include <optional>
#include <string>
#include <vector>

namespace refinet {

// Operator spec file:
//   {"M", "p", "L", "mask": [{"j", "A"}], "gamma"?, "anchor"?, "defect"?,
//    "forcing"?: [{"stage": int | "all", "curve"} | {"template": {"curves", "lambda"}}],
//    "states"?: {"r", "transitions", "C"} | {"r", "mask": [{"a", "b", "j", "A"}]}}
// Curves are breakpoint rows [[t, y_1, ..., y_p], ...], constant beyond the ends.
// "lambda" is either {"ratio": x} or a table [[1, l_1, ...], ...].
struct OperatorSpec {
  RefinementOp op;
  CpwlCurve gamma;
  std::optional<ForcingSchedule> forcing;
  std::optional<CpwlCurve> anchor;
  std::optional<CpwlCurve> defect;
  std::optional<FiniteStateSystem> states;
};

auto parse_operator_spec(const std::string& text) -> OperatorSpec;
auto load_operator_spec(const std::string& path) -> OperatorSpec;
// hat(1/4, 1/2, 3/4) e_1
auto default_gamma(int p, int L) -> CpwlCurve;

struct NetworkMeta {
  std::string builder;
  std::string params;
  int stage = -1;
};

struct LoadedNetwork {
  ReluNetwork net;
  NetworkMeta meta;
};

// Layers with density below 1/4 are written as "weights_sparse":
// {"rows", "cols", "entries": [[i, j, w], ...]}.
auto network_to_json(const ReluNetwork& net, const NetworkMeta& meta) -> std::string;
auto network_from_json(const std::string& text) -> LoadedNetwork;
void save_network(const std::string& path, const ReluNetwork& net, const NetworkMeta& meta);
auto load_network(const std::string& path) -> LoadedNetwork;

// Single polyline through the first two coordinates, fitted into the unit
// square (aspect kept, y up) with a 5% margin.
auto polyline_svg(const std::vector<Vec>& points) -> std::string;
// Header t,y1..yp then one row per sample, 17 significant digits.
auto samples_csv(const std::vector<double>& ts, const std::vector<Vec>& values) -> std::string;

auto read_file(const std::string& path) -> std::string;
void write_file(const std::string& path, const std::string& text);

}  // namespace refinet
