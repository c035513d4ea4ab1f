#include "refinet/errors.hpp"
#include "refinet/instance.hpp"
#include "refinet/io.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace refinet;

// exit codes
constexpr int exit_ok = 0;
constexpr int exit_verify_failed = 1;
constexpr int exit_parse = 2;
constexpr int exit_precondition = 3;
constexpr int exit_io = 4;

struct Source {
  std::string spec;
  std::string example;
  std::string mode;
  int stage = 1;

  void add_to(CLI::App* cmd, bool with_stage = true) {
    auto* s = cmd->add_option("--spec", spec, "operator spec file (JSON)");
    auto* e = cmd->add_option("--example", example, "gallery instance (koch, levy, heighway, hilbert_type, hilbert, gosper, morton[:p], hilbert_rp[:p])");
    s->excludes(e);
    cmd->add_option("--mode", mode, "homogeneous | affine | anchored | stacked (default depends on the instance)");
    if (with_stage) cmd->add_option("--stage", stage, "stage n")->check(CLI::NonNegativeNumber);
  }

  auto instance() const -> Instance {
    if (!spec.empty()) return spec_instance(load_operator_spec(spec), spec);
    if (!example.empty()) return example_instance(example);
    throw precondition_error{"one of --spec or --example is required"};
  }

  auto build_mode_for(const Instance& inst) const -> build_mode {
    return mode.empty() ? inst.default_mode : parse_mode(mode);
  }
};

auto samples(const Instance& inst, int n, build_mode m, const std::string& backend, int resolution)
    -> std::pair<std::vector<double>, std::vector<Vec>> {
  std::vector<double> ts;
  for (int i = 0; i <= resolution; ++i) ts.push_back(static_cast<double>(inst.L) * i / resolution);
  std::vector<Vec> ys;
  if (backend == "oracle") {
    const auto c = inst.oracle(n, m);
    for (double t : ts) ys.push_back(c(t));
  } else if (backend == "network") {
    ys = eval_grid(inst.compile(n, m).net, ts);
  } else {
    throw precondition_error{"unknown backend '" + backend + "'"};
  }
  return {std::move(ts), std::move(ys)};
}

auto default_resolution(const Instance& inst, int n) -> int {
  const double r = 4.0 * std::pow(static_cast<double>(inst.M), n) * inst.L;
  if (r > 5e7) throw precondition_error{"stage too large to sample at 4 M^n points"};
  return static_cast<int>(r);
}

void print_sweep(const Instance& inst, build_mode m, int lo, int hi) {
  fmt::print("{:>3} {:>8} {:>7} {:>7} {:>7} {:>14} {:>10} {:>10}\n", "n", "width", "depth", "d1", "d2", "coeff_max",
             "log_coeff", "d_log");
  std::vector<int> depth;
  std::vector<double> logc;
  for (int n = lo; n <= hi; ++n) {
    const auto c = inst.compile(n, m);
    depth.push_back(c.stats.depth);
    logc.push_back(std::log(c.stats.coeff_max));
    const auto k = depth.size();
    const std::string d1 = k >= 2 ? std::to_string(depth[k - 1] - depth[k - 2]) : "-";
    const std::string d2 = k >= 3 ? std::to_string(depth[k - 1] - 2 * depth[k - 2] + depth[k - 3]) : "-";
    const std::string dl = k >= 2 ? fmt::format("{:.4f}", logc[k - 1] - logc[k - 2]) : "-";
    fmt::print("{:>3} {:>8} {:>7} {:>7} {:>7} {:>14.6g} {:>10.4f} {:>10}\n", n, c.stats.width, c.stats.depth, d1, d2,
               c.stats.coeff_max, logc.back(), dl);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile refinement iterates into exact ReLU networks and check them against direct oracles"};
  app.require_subcommand(1);

  Source build_src;
  std::string build_out;
  auto* build = app.add_subcommand("build", "compile the stage-n iterate and write the network file");
  build_src.add_to(build);
  build->add_option("--out", build_out, "network file")->required();

  Source verify_src;
  int grid = 10000;
  double tol = 1e-6;
  std::string verify_net;
  std::string verify_out;
  auto* verify_cmd = app.add_subcommand("verify", "compare the compiled network with the oracle");
  verify_src.add_to(verify_cmd);
  verify_cmd->add_option("--grid", grid, "uniform grid size")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--tol", tol, "max abs error tolerance");
  verify_cmd->add_option("--network", verify_net, "check this network file instead of compiling");
  verify_cmd->add_option("--out", verify_out, "write the JSON report here");

  Source render_src;
  std::string render_backend = "oracle";
  std::string render_out;
  int render_res = 0;
  auto* render = app.add_subcommand("render", "write the stage-n curve as SVG");
  render_src.add_to(render);
  render->add_option("--backend", render_backend, "oracle | network");
  render->add_option("--resolution", render_res, "parameter samples (at least 4 M^n)");
  render->add_option("--out", render_out, "SVG file")->required();

  Source sample_src;
  std::string sample_backend = "oracle";
  std::string sample_out;
  int sample_res = 0;
  auto* sample = app.add_subcommand("sample", "write stage-n samples as CSV");
  sample_src.add_to(sample);
  sample->add_option("--backend", sample_backend, "oracle | network");
  sample->add_option("--resolution", sample_res, "number of intervals (default 4 M^n)");
  sample->add_option("--out", sample_out, "CSV file")->required();

  Source stats_src;
  std::string stats_net;
  std::string stages;
  auto* stats = app.add_subcommand("stats", "network size, or a growth table over a stage range");
  stats_src.add_to(stats, false);
  stats->add_option("--network", stats_net, "network file");
  stats->add_option("--stages", stages, "stage range a:b for a sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_parse;
  }

  try {
    if (*build) {
      const auto inst = build_src.instance();
      const auto m = build_src.build_mode_for(inst);
      const auto c = inst.compile(build_src.stage, m);
      save_network(build_out, c.net, {c.builder, c.params, c.n});
      fmt::print("{} {} n={}: width={} depth={} coeff_max={:.6g} -> {}\n", inst.name, c.builder, c.n, c.stats.width,
                 c.stats.depth, c.stats.coeff_max, build_out);
      return exit_ok;
    }
    if (*verify_cmd) {
      const auto inst = verify_src.instance();
      const auto m = verify_src.build_mode_for(inst);
      std::optional<LoadedNetwork> loaded;
      if (!verify_net.empty()) loaded = load_network(verify_net);
      const auto r = verify(inst, verify_src.stage, m, grid, tol, loaded ? &loaded->net : nullptr);
      fmt::print("{}\n", report_text(r));
      if (!verify_out.empty()) write_file(verify_out, report_json(r) + "\n");
      return r.pass ? exit_ok : exit_verify_failed;
    }
    if (*render) {
      const auto inst = render_src.instance();
      const auto m = render_src.build_mode_for(inst);
      const int res = std::max(render_res, default_resolution(inst, render_src.stage));
      const auto [ts, ys] = samples(inst, render_src.stage, m, render_backend, res);
      write_file(render_out, polyline_svg(ys));
      fmt::print("{} n={} {} samples={} -> {}\n", inst.name, render_src.stage, render_backend, ts.size(), render_out);
      return exit_ok;
    }
    if (*sample) {
      const auto inst = sample_src.instance();
      const auto m = sample_src.build_mode_for(inst);
      const int res = sample_res > 0 ? sample_res : default_resolution(inst, sample_src.stage);
      const auto [ts, ys] = samples(inst, sample_src.stage, m, sample_backend, res);
      write_file(sample_out, samples_csv(ts, ys));
      fmt::print("{} n={} {} rows={} -> {}\n", inst.name, sample_src.stage, sample_backend, ts.size(), sample_out);
      return exit_ok;
    }
    if (*stats) {
      if (!stats_net.empty()) {
        const auto l = load_network(stats_net);
        const auto s = net_stats(l.net);
        fmt::print("width={} depth={} coeff_max={:.6g} layers={} nonzeros={} builder={} stage={}\n", s.width, s.depth,
                   s.coeff_max, s.layer_count, l.net.nonzeros(), l.meta.builder, l.meta.stage);
        return exit_ok;
      }
      const auto colon = stages.find(':');
      if (colon == std::string::npos) throw precondition_error{"stats needs --network or --stages a:b"};
      int lo = 0;
      int hi = 0;
      try {
        lo = std::stoi(stages.substr(0, colon));
        hi = std::stoi(stages.substr(colon + 1));
      } catch (const std::exception&) {
        throw parse_error{"--stages must look like a:b"};
      }
      if (lo < 0 || hi < lo) throw precondition_error{"--stages needs 0 <= a <= b"};
      const auto inst = stats_src.instance();
      print_sweep(inst, stats_src.build_mode_for(inst), lo, hi);
      return exit_ok;
    }
  } catch (const parse_error& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return exit_parse;
  } catch (const precondition_error& e) {
    fmt::print(stderr, "precondition failed: {}\n", e.what());
    return exit_precondition;
  } catch (const structural_error& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return exit_precondition;
  } catch (const domain_error& e) {
    fmt::print(stderr, "domain error: {}\n", e.what());
    return exit_precondition;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_io;
  }
  return exit_ok;
}
