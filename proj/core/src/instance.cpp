#include "refinet/instance.hpp"

#include "refinet/errors.hpp"
#include "refinet/gallery.hpp"
#include "refinet/reductions.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

namespace refinet {

namespace {

auto split_param(const std::string& name, int fallback) -> std::pair<std::string, int> {
  const auto colon = name.find(':');
  if (colon == std::string::npos) return {name, fallback};
  try {
    std::size_t used = 0;
    const int v = std::stoi(name.substr(colon + 1), &used);
    if (used != name.size() - colon - 1) throw std::invalid_argument{"trailing"};
    return {name.substr(0, colon), v};
  } catch (const std::exception&) {
    throw precondition_error{"bad example parameter in '" + name + "'"};
  }
}

auto unsupported(const std::string& name, build_mode m) -> precondition_error {
  return precondition_error{"mode '" + mode_name(m) + "' is not available for " + name};
}

auto polygonal_instance(const std::string& name, const RefinementOp& op) -> Instance {
  const auto in = anchored_instance(op);
  const auto gamma = default_gamma(op.p(), 1);
  Instance inst{name, op.M(), op.p(), 1, build_mode::anchored, {build_mode::anchored, build_mode::homogeneous}, {}, {}};
  inst.compile_fn = [in, gamma](int n, build_mode m) {
    if (m == build_mode::homogeneous) return compile_homogeneous(in.op, gamma, n);
    return compile_anchored(in.op, in.B, in.Gamma, in.eta, n).full;
  };
  inst.oracle_fn = [in, gamma](int n, build_mode m) {
    if (m == build_mode::homogeneous) return apply_v_iterate(in.op, gamma, n);
    return polygonal_oracle(in.op, n);
  };
  return inst;
}

auto connector_instance(const ConnectorInstance& c) -> Instance {
  Instance inst{c.name, c.M(), c.p, 1, build_mode::affine, {build_mode::affine}, {}, {}};
  inst.compile_fn = [c](int n, build_mode) { return compile_connector(c, n); };
  inst.oracle_fn = [c](int n, build_mode) { return c.oracle(n); };
  return inst;
}

auto gosper_instance() -> Instance {
  const auto in = gosper_anchored();
  Instance inst{"gosper", 7, 4, 1, build_mode::stacked, {build_mode::stacked}, {}, {}};
  inst.compile_fn = [in](int n, build_mode) {
    auto c = compile_anchored(in.op, in.B, in.Gamma, in.eta, n).full;
    c.builder = "stacked";
    return c;
  };
  inst.oracle_fn = [](int n, build_mode) { return stack_curves(gosper_oracle(n)); };
  return inst;
}

auto stage_schedule(const OperatorSpec& s) -> ForcingSchedule {
  return s.forcing ? *s.forcing : ForcingSchedule::none(s.op.p(), s.op.L());
}

auto constant_forcing(const OperatorSpec& s) -> CpwlCurve {
  if (!s.forcing) return CpwlCurve::zero(s.op.p(), s.op.L());
  if (s.forcing->is_template() || !s.forcing->stages().empty() || !s.forcing->default_curve())
    throw precondition_error{"anchored mode needs a stage-independent forcing (\"stage\": \"all\")"};
  return *s.forcing->default_curve();
}

}  // namespace

auto parse_mode(const std::string& s) -> build_mode {
  if (s == "homogeneous") return build_mode::homogeneous;
  if (s == "affine") return build_mode::affine;
  if (s == "anchored") return build_mode::anchored;
  if (s == "stacked") return build_mode::stacked;
  throw precondition_error{"unknown mode '" + s + "'"};
}

auto mode_name(build_mode m) -> std::string {
  switch (m) {
    case build_mode::homogeneous: return "homogeneous";
    case build_mode::affine: return "affine";
    case build_mode::anchored: return "anchored";
    case build_mode::stacked: return "stacked";
  }
  return "?";
}

auto Instance::compile(int n, build_mode m) const -> CompiledIterate {
  if (!modes.count(m)) throw unsupported(name, m);
  return compile_fn(n, m);
}

auto Instance::oracle(int n, build_mode m) const -> CpwlCurve {
  if (!modes.count(m)) throw unsupported(name, m);
  return oracle_fn(n, m);
}

auto example_instance(const std::string& full) -> Instance {
  if (full.rfind("morton", 0) == 0) {
    const auto [base, p] = split_param(full, 2);
    if (base == "morton") {
      auto inst = connector_instance(morton_instance(p));
      inst.name = full;
      return inst;
    }
  }
  if (full.rfind("hilbert_rp", 0) == 0) {
    const auto [base, p] = split_param(full, 3);
    if (base == "hilbert_rp") return polygonal_instance(full, hilbert_rp(p));
  }
  if (full == "koch") return polygonal_instance(full, polygonal_generator(koch_spec()));
  if (full == "levy") return polygonal_instance(full, polygonal_generator(levy_spec()));
  if (full == "heighway") return polygonal_instance(full, polygonal_generator(heighway_spec()));
  if (full == "hilbert_type") return polygonal_instance(full, polygonal_generator(hilbert_type_spec()));
  if (full == "hilbert") return connector_instance(hilbert_connector_instance());
  if (full == "gosper") return gosper_instance();
  throw precondition_error{"unknown example '" + full + "'"};
}

auto spec_instance(const OperatorSpec& spec, const std::string& name) -> Instance {
  const auto& op = spec.op;
  Instance inst{name, op.M(), op.p(), op.L(), build_mode::homogeneous, {}, {}, {}};
  if (spec.states) {
    const auto st = stack(*spec.states);
    const int r = spec.states->r();
    inst.modes = {build_mode::stacked};
    inst.default_mode = build_mode::stacked;
    inst.out_dim = op.p() * r;
    const std::vector<CpwlCurve> gammas(static_cast<std::size_t>(r), spec.gamma);
    const auto sched = st.forcing ? ForcingSchedule::constant(*st.forcing)
                                  : ForcingSchedule::none(st.op.p(), st.op.L());
    const auto sys = *spec.states;
    inst.compile_fn = [st, gammas, sched](int n, build_mode) {
      auto c = compile_affine(st.op, stack_curves(gammas), sched, n);
      c.builder = "stacked";
      return c;
    };
    inst.oracle_fn = [st, sys, gammas](int n, build_mode) {
      check_oracle_cap(st.op, stack_curves(gammas), n);
      auto g = gammas;
      for (int k = 0; k < n; ++k) g = sys.apply(g);
      return stack_curves(g);
    };
    return inst;
  }
  inst.modes = {build_mode::homogeneous, build_mode::affine, build_mode::anchored};
  if (spec.forcing) inst.default_mode = build_mode::affine;
  if (spec.anchor) inst.default_mode = build_mode::anchored;
  inst.compile_fn = [spec](int n, build_mode m) {
    switch (m) {
      case build_mode::homogeneous: return compile_homogeneous(spec.op, spec.gamma, n);
      case build_mode::affine: return compile_affine(spec.op, spec.gamma, stage_schedule(spec), n);
      default: {
        const auto G = spec.anchor ? *spec.anchor : straight_anchor(spec.op.p());
        const auto eta = spec.defect ? *spec.defect : CpwlCurve::zero(spec.op.p(), spec.op.L());
        return compile_anchored(spec.op, constant_forcing(spec), G, eta, n).full;
      }
    }
  };
  inst.oracle_fn = [spec](int n, build_mode m) {
    switch (m) {
      case build_mode::homogeneous: return apply_v_iterate(spec.op, spec.gamma, n);
      case build_mode::affine: return direct_stage_iterate(spec.op, spec.gamma, stage_schedule(spec), n);
      default: {
        const auto G = spec.anchor ? *spec.anchor : straight_anchor(spec.op.p());
        const auto eta = spec.defect ? *spec.defect : CpwlCurve::zero(spec.op.p(), spec.op.L());
        return anchored_oracle(spec.op, constant_forcing(spec), G, eta, n);
      }
    }
  };
  return inst;
}

auto eval_grid(const ReluNetwork& net, const std::vector<double>& ts) -> std::vector<Vec> {
  std::vector<Vec> out(ts.size());
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  if (workers == 1 || ts.size() < 256) {
    for (std::size_t i = 0; i < ts.size(); ++i) out[i] = net.eval_scalar(ts[i]);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < ts.size(); i += workers) out[i] = net.eval_scalar(ts[i]);
    });
  for (auto& th : pool) th.join();
  return out;
}

auto verification_grid(int M, int L, int n, double delta, int g) -> std::vector<double> {
  std::vector<double> ts;
  const double lo = -0.25;
  const double hi = L + 0.25;
  for (int i = 0; i < g; ++i) ts.push_back(g == 1 ? 0.5 : lo + (hi - lo) * i / (g - 1));
  const double Mn = std::pow(static_cast<double>(M), n);
  const auto count = static_cast<long long>(std::llround(Mn * L));
  for (long long k = 0; k <= count; ++k) {
    const double t = static_cast<double>(k) / Mn;
    ts.push_back(t);
    if (delta > 0.0) {
      ts.push_back(t - 0.5 * delta);
      ts.push_back(t + 0.5 * delta);
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

auto verify(const Instance& inst, int n, build_mode mode, int g, double tol, const ReluNetwork* net) -> VerifyReport {
  const auto t0 = std::chrono::steady_clock::now();
  const auto oracle = inst.oracle(n, mode);
  std::optional<CompiledIterate> compiled;
  if (!net) {
    compiled = inst.compile(n, mode);
    net = &compiled->net;
  }
  if (net->input_dim() != 1 || net->output_dim() != inst.out_dim)
    throw precondition_error{"network shape does not match the instance (expected 1 -> " +
                             std::to_string(inst.out_dim) + ")"};
  const double delta = n >= 1 ? stage_config(LoopConfig{}, inst.M, n).delta_n() : 0.0;
  const auto ts = verification_grid(inst.M, inst.L, n, delta, g);
  const auto ys = eval_grid(*net, ts);
  double err = 0.0;
  double scale = 0.0;
  double worst = ts.front();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Vec o = oracle(ts[i]);
    const double e = (ys[i] - o).cwiseAbs().maxCoeff();
    if (!(e <= err)) {
      err = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
      worst = ts[i];
    }
    scale = std::max(scale, o.cwiseAbs().maxCoeff());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return VerifyReport{inst.name, mode_name(mode), n,   ts.size(), err, scale > 0.0 ? err / scale : err,
                      worst,     net_stats(*net), tol, err <= tol, secs};
}

auto report_json(const VerifyReport& r) -> std::string {
  nlohmann::json j{{"instance", r.instance},
                   {"mode", r.mode},
                   {"stage", r.stage},
                   {"grid_points", r.grid_points},
                   {"max_abs_error", r.max_abs},
                   {"max_rel_error", r.max_rel},
                   {"worst_t", r.worst_t},
                   {"width", r.stats.width},
                   {"depth", r.stats.depth},
                   {"coeff_max", r.stats.coeff_max},
                   {"tolerance", r.tol},
                   {"pass", r.pass},
                   {"seconds", r.seconds}};
  return j.dump(2);
}

auto report_text(const VerifyReport& r) -> std::string {
  std::ostringstream os;
  os << (r.pass ? "PASS " : "FAIL ") << r.instance << " mode=" << r.mode << " n=" << r.stage
     << " points=" << r.grid_points << " max_abs=" << r.max_abs << " (tol " << r.tol << ", worst t=" << r.worst_t
     << ") max_rel=" << r.max_rel << " width=" << r.stats.width << " depth=" << r.stats.depth
     << " coeff_max=" << r.stats.coeff_max << " time=" << r.seconds << "s";
  return os.str();
}

}  // namespace refinet
