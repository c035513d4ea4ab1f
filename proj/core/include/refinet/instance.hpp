#pragma once

#include "refinet/cascade_compiler.hpp"
#include "refinet/cpwl.hpp"
#include "refinet/io.hpp"
#include "refinet/relu_network.hpp"

#include <functional>
#include <set>
#include <string>
#include <vector>

namespace refinet {

enum class build_mode { homogeneous, affine, anchored, stacked };

auto parse_mode(const std::string& s) -> build_mode;
auto mode_name(build_mode m) -> std::string;

// A compilable problem together with its oracle, per build mode.
struct Instance {
  std::string name;
  int M;
  int out_dim;
  int L;  // parameters live in [0, L]
  build_mode default_mode;
  std::set<build_mode> modes;
  std::function<CompiledIterate(int, build_mode)> compile_fn;
  std::function<CpwlCurve(int, build_mode)> oracle_fn;

  auto compile(int n, build_mode m) const -> CompiledIterate;
  auto oracle(int n, build_mode m) const -> CpwlCurve;
};

// Gallery names; morton and hilbert_rp take an optional ":p" suffix.
auto example_instance(const std::string& name) -> Instance;
auto spec_instance(const OperatorSpec& spec, const std::string& name) -> Instance;

// Evaluates net at every t (data-parallel over the grid).
auto eval_grid(const ReluNetwork& net, const std::vector<double>& ts) -> std::vector<Vec>;

// g uniform points on [-1/4, L + 1/4], the stage's M-ary points k / M^n in
// [0, L] and the probes k / M^n +- delta / 2.
auto verification_grid(int M, int L, int n, double delta, int g) -> std::vector<double>;

struct VerifyReport {
  std::string instance;
  std::string mode;
  int stage;
  std::size_t grid_points;
  double max_abs;
  double max_rel;  // max_abs over the oracle's sup norm
  double worst_t;
  NetStats stats;
  double tol;
  bool pass;
  double seconds;
};

// net == nullptr compiles the instance; otherwise the given net is checked.
auto verify(const Instance& inst, int n, build_mode mode, int g, double tol, const ReluNetwork* net = nullptr)
    -> VerifyReport;
auto report_json(const VerifyReport& r) -> std::string;
auto report_text(const VerifyReport& r) -> std::string;

}  // namespace refinet
