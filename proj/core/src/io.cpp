#include "refinet/io.hpp"

#include "refinet/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace refinet {

using nlohmann::json;

namespace {

auto need(const json& j, const char* key) -> const json& {
  if (!j.is_object() || !j.contains(key)) throw parse_error{std::string{"missing field '"} + key + "'"};
  return j.at(key);
}

auto as_int(const json& j, const char* what) -> int {
  if (!j.is_number_integer()) throw parse_error{std::string{what} + " must be an integer"};
  return j.get<int>();
}

auto as_real(const json& j, const char* what) -> double {
  if (!j.is_number()) throw parse_error{std::string{what} + " must be a number"};
  return j.get<double>();
}

auto parse_matrix(const json& j, int rows, int cols, const std::string& what) -> Mat {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) throw parse_error{what + ": expected " + std::to_string(rows) + " rows"};
  Mat A(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw parse_error{what + ": expected " + std::to_string(cols) + " columns"};
    for (int c = 0; c < cols; ++c) A(r, c) = as_real(row[static_cast<std::size_t>(c)], "matrix entry");
  }
  return A;
}

auto parse_curve(const json& j, int p, int L, const std::string& what) -> CpwlCurve {
  if (!j.is_array() || j.empty()) throw parse_error{what + ": breakpoint list must be a nonempty array"};
  std::vector<double> ts;
  std::vector<Vec> vs;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != p + 1)
      throw parse_error{what + ": each breakpoint needs t and " + std::to_string(p) + " values"};
    ts.push_back(as_real(row[0], "breakpoint t"));
    Vec v(p);
    for (int i = 0; i < p; ++i) v[i] = as_real(row[static_cast<std::size_t>(i) + 1], "breakpoint value");
    vs.push_back(v);
  }
  try {
    return polyline_curve(ts, vs, L);
  } catch (const structural_error& e) {
    throw parse_error{what + ": " + e.what()};
  }
}

auto parse_forcing(const json& j, int p, int L) -> ForcingSchedule {
  if (!j.is_array()) throw parse_error{"forcing must be an array"};
  ForcingSchedule s{p, L};
  for (const auto& entry : j) {
    if (entry.contains("template")) {
      if (j.size() != 1) throw parse_error{"forcing: a template entry must be the only entry"};
      const auto& t = entry.at("template");
      std::vector<CpwlCurve> curves;
      for (const auto& c : need(t, "curves")) curves.push_back(parse_curve(c, p, L, "forcing template"));
      const auto& lam = need(t, "lambda");
      if (lam.is_object()) return ForcingSchedule::geometric_templates(std::move(curves), as_real(need(lam, "ratio"), "ratio"));
      std::vector<std::vector<double>> table;
      for (const auto& row : lam) {
        std::vector<double> r;
        for (const auto& x : row) r.push_back(as_real(x, "lambda"));
        table.push_back(std::move(r));
      }
      try {
        return ForcingSchedule::tabulated_templates(std::move(curves), std::move(table));
      } catch (const structural_error& e) {
        throw parse_error{e.what()};
      }
    }
    const auto& st = need(entry, "stage");
    auto curve = parse_curve(need(entry, "curve"), p, L, "forcing curve");
    if (st.is_string() && st.get<std::string>() == "all") s.set_default(std::move(curve));
    else s.set_stage(as_int(st, "stage"), std::move(curve));
  }
  return s;
}

auto parse_states(const json& j, int M, int p, int L) -> FiniteStateSystem {
  const int r = as_int(need(j, "r"), "r");
  if (r < 1) throw parse_error{"states: r must be >= 1"};
  try {
    if (j.contains("transitions")) {
      std::vector<std::vector<int>> sigma;
      std::vector<std::vector<Mat>> C;
      for (const auto& row : need(j, "transitions")) {
        std::vector<int> s;
        for (const auto& b : row) s.push_back(as_int(b, "transition"));
        sigma.push_back(std::move(s));
      }
      for (const auto& row : need(j, "C")) {
        std::vector<Mat> cs;
        for (const auto& m : row) cs.push_back(parse_matrix(m, p, p, "C"));
        C.push_back(std::move(cs));
      }
      if (static_cast<int>(sigma.size()) != r) throw parse_error{"states: one transition row per state required"};
      return FiniteStateSystem::deterministic(M, p, L, std::move(sigma), std::move(C));
    }
    std::vector<StateMaskEntry> mask;
    for (const auto& e : need(j, "mask"))
      mask.push_back({as_int(need(e, "a"), "a"), as_int(need(e, "b"), "b"), as_int(need(e, "j"), "j"),
                      parse_matrix(need(e, "A"), p, p, "A")});
    std::vector<std::optional<CpwlCurve>> forcing;
    if (j.contains("forcing"))
      for (const auto& f : j.at("forcing"))
        forcing.push_back(f.is_null() ? std::nullopt : std::optional{parse_curve(f, p, L, "state forcing")});
    return FiniteStateSystem{M, p, r, L, std::move(mask), std::move(forcing)};
  } catch (const structural_error& e) {
    throw parse_error{e.what()};
  }
}

auto layer_json(const Layer& l) -> json {
  json o;
  const auto rows = l.W.rows();
  const auto cols = l.W.cols();
  if (static_cast<double>(l.W.nonZeros()) < 0.25 * static_cast<double>(rows) * static_cast<double>(cols)) {
    json entries = json::array();
    for (Eigen::Index r = 0; r < rows; ++r)
      for (SpMat::InnerIterator it(l.W, r); it; ++it) entries.push_back({it.row(), it.col(), it.value()});
    o["weights_sparse"] = {{"rows", rows}, {"cols", cols}, {"entries", std::move(entries)}};
  } else {
    const Mat W{l.W};
    json w = json::array();
    for (Eigen::Index r = 0; r < rows; ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < cols; ++c) row.push_back(W(r, c));
      w.push_back(std::move(row));
    }
    o["weights"] = std::move(w);
  }
  o["bias"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
  o["activation"] = l.act == activation::relu ? "relu" : "linear";
  return o;
}

auto layer_from_json(const json& o, Eigen::Index in_dim) -> Layer {
  const auto& bj = need(o, "bias");
  if (!bj.is_array()) throw parse_error{"bias must be an array"};
  Vec b(static_cast<Eigen::Index>(bj.size()));
  for (std::size_t i = 0; i < bj.size(); ++i) b[static_cast<Eigen::Index>(i)] = as_real(bj[i], "bias");
  SpMat W;
  if (o.contains("weights_sparse")) {
    const auto& s = o.at("weights_sparse");
    const int rows = as_int(need(s, "rows"), "rows");
    const int cols = as_int(need(s, "cols"), "cols");
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& e : need(s, "entries")) {
      if (!e.is_array() || e.size() != 3) throw parse_error{"sparse entry must be [i, j, w]"};
      const int i = as_int(e[0], "row index");
      const int k = as_int(e[1], "column index");
      if (i < 0 || i >= rows || k < 0 || k >= cols) throw parse_error{"sparse entry index out of range"};
      t.emplace_back(i, k, as_real(e[2], "weight"));
    }
    W.resize(rows, cols);
    W.setFromTriplets(t.begin(), t.end());
  } else {
    const auto& w = need(o, "weights");
    if (!w.is_array()) throw parse_error{"weights must be an array"};
    const int rows = static_cast<int>(w.size());
    const int cols = rows == 0 ? static_cast<int>(in_dim) : static_cast<int>(w[0].size());
    W = parse_matrix(w, rows, cols, "weights").sparseView(0.0, 0.0);
  }
  const auto act = need(o, "activation").get<std::string>();
  if (act != "relu" && act != "linear") throw parse_error{"activation must be relu or linear"};
  return Layer{std::move(W), std::move(b), act == "relu" ? activation::relu : activation::linear};
}

auto fmt17(double x) -> std::string {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

auto default_gamma(int p, int L) -> CpwlCurve {
  std::vector<ScalarCpwl> cs{hat(0.25, 0.5, 0.75)};
  for (int i = 1; i < p; ++i) cs.push_back(ScalarCpwl::constant(0.0));
  return CpwlCurve{std::move(cs), L};
}

auto parse_operator_spec(const std::string& text) -> OperatorSpec {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw parse_error{std::string{"operator spec is not valid JSON: "} + e.what()};
  }
  try {
    const int M = as_int(need(j, "M"), "M");
    const int p = as_int(need(j, "p"), "p");
    const int L = as_int(need(j, "L"), "L");
    if (M < 2 || p < 1 || L < 1) throw parse_error{"operator spec: need M >= 2, p >= 1, L >= 1"};
    std::optional<FiniteStateSystem> states;
    if (j.contains("states")) states = parse_states(j.at("states"), M, p, L);
    std::vector<MaskEntry> mask;
    if (j.contains("mask") || !states) {
      for (const auto& e : need(j, "mask")) mask.push_back({as_int(need(e, "j"), "j"), parse_matrix(need(e, "A"), p, p, "A")});
    }
    std::optional<RefinementOp> op;
    try {
      op.emplace(M, p, L, std::move(mask));
    } catch (const structural_error& e) {
      throw parse_error{e.what()};
    }
    OperatorSpec spec{*op, j.contains("gamma") ? parse_curve(j.at("gamma"), p, L, "gamma") : default_gamma(p, L),
                      std::nullopt, std::nullopt, std::nullopt, std::move(states)};
    if (j.contains("forcing")) spec.forcing = parse_forcing(j.at("forcing"), p, L);
    if (j.contains("anchor")) spec.anchor = parse_curve(j.at("anchor"), p, L, "anchor");
    if (j.contains("defect")) spec.defect = parse_curve(j.at("defect"), p, L, "defect");
    return spec;
  } catch (const json::exception& e) {
    throw parse_error{std::string{"operator spec: "} + e.what()};
  }
}

auto load_operator_spec(const std::string& path) -> OperatorSpec { return parse_operator_spec(read_file(path)); }

auto network_to_json(const ReluNetwork& net, const NetworkMeta& meta) -> std::string {
  json j;
  j["input_dim"] = net.input_dim();
  j["layers"] = json::array();
  for (const auto& l : net.layers()) j["layers"].push_back(layer_json(l));
  const auto st = net_stats(net);
  j["meta"] = {{"width", st.width},   {"depth", st.depth},   {"coeff_max", st.coeff_max},
               {"builder", meta.builder}, {"params", meta.params}, {"stage", meta.stage}};
  return j.dump();
}

auto network_from_json(const std::string& text) -> LoadedNetwork {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw parse_error{std::string{"network file is not valid JSON: "} + e.what()};
  }
  try {
    const int in = as_int(need(j, "input_dim"), "input_dim");
    std::vector<Layer> layers;
    Eigen::Index d = in;
    for (const auto& l : need(j, "layers")) {
      layers.push_back(layer_from_json(l, d));
      d = layers.back().W.rows();
    }
    NetworkMeta meta;
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      meta.builder = m.value("builder", "");
      meta.params = m.value("params", "");
      meta.stage = m.value("stage", -1);
    }
    try {
      return {ReluNetwork{in, std::move(layers)}, std::move(meta)};
    } catch (const structural_error& e) {
      throw parse_error{std::string{"network file: "} + e.what()};
    }
  } catch (const json::exception& e) {
    throw parse_error{std::string{"network file: "} + e.what()};
  }
}

void save_network(const std::string& path, const ReluNetwork& net, const NetworkMeta& meta) {
  write_file(path, network_to_json(net, meta));
}

auto load_network(const std::string& path) -> LoadedNetwork { return network_from_json(read_file(path)); }

auto polyline_svg(const std::vector<Vec>& points) -> std::string {
  if (points.empty() || points.front().size() < 1) throw structural_error{"svg: no points"};
  auto xy = [](const Vec& v) { return std::pair{v[0], v.size() > 1 ? v[1] : 0.0}; };
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& v : points) {
    const auto [x, y] = xy(v);
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  const double span = std::max({x1 - x0, y1 - y0, 1e-300});
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-0.05 -0.05 1.1 1.1\" width=\"800\" height=\"800\">\n"
     << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.002\" stroke-linejoin=\"round\" points=\"";
  char buf[64];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [x, y] = xy(points[i]);
    std::snprintf(buf, sizeof buf, "%s%.9g,%.9g", i ? " " : "", (x - x0) / span, 1.0 - (y - y0) / span);
    os << buf;
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

auto samples_csv(const std::vector<double>& ts, const std::vector<Vec>& values) -> std::string {
  if (ts.size() != values.size()) throw structural_error{"csv: size mismatch"};
  std::ostringstream os;
  os << "t";
  const auto p = values.empty() ? 0 : values.front().size();
  for (Eigen::Index i = 0; i < p; ++i) os << ",y" << i + 1;
  os << '\n';
  for (std::size_t k = 0; k < ts.size(); ++k) {
    os << fmt17(ts[k]);
    for (Eigen::Index i = 0; i < p; ++i) os << ',' << fmt17(values[k][i]);
    os << '\n';
  }
  return os.str();
}

auto read_file(const std::string& path) -> std::string {
  std::ifstream in{path, std::ios::binary};
  if (!in) throw parse_error{"cannot open '" + path + "'"};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out{path, std::ios::binary};
  if (!out) throw std::runtime_error{"cannot write '" + path + "'"};
  out << text;
  if (!out) throw std::runtime_error{"write to '" + path + "' failed"};
}

}  // namespace refinet
