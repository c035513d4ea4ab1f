#include "refinet/cascade_compiler.hpp"
#include "refinet/gallery.hpp"
#include "refinet/instance.hpp"
#include "refinet/loop_controller.hpp"
#include "refinet/refinement.hpp"

#include <benchmark/benchmark.h>

using namespace refinet;

namespace {

auto scalar_op() -> RefinementOp {
  return RefinementOp{2, 1, 1, {{0, Mat::Constant(1, 1, 1.0)}, {1, Mat::Constant(1, 1, 1.0)}}};
}

auto scalar_gamma() -> CpwlCurve { return CpwlCurve{{hat(0.25, 0.5, 0.75)}, 1}; }

void BM_CompileHomogeneous(benchmark::State& state) {
  const auto op = scalar_op();
  const auto gamma = scalar_gamma();
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compile_homogeneous(op, gamma, n));
}
BENCHMARK(BM_CompileHomogeneous)->DenseRange(2, 8, 2)->Unit(benchmark::kMillisecond);

void BM_EvalHomogeneous(benchmark::State& state) {
  const auto c = compile_homogeneous(scalar_op(), scalar_gamma(), static_cast<int>(state.range(0)));
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(c.net.eval_scalar(t));
    t = t < 1.0 ? t + 1e-3 : 0.0;
  }
  state.counters["depth"] = c.stats.depth;
  state.counters["width"] = c.stats.width;
}
BENCHMARK(BM_EvalHomogeneous)->DenseRange(2, 8, 2)->Unit(benchmark::kMicrosecond);

void BM_OracleHomogeneous(benchmark::State& state) {
  const auto op = scalar_op();
  const auto gamma = scalar_gamma();
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(apply_v_iterate(op, gamma, n));
}
BENCHMARK(BM_OracleHomogeneous)->DenseRange(2, 14, 4)->Unit(benchmark::kMicrosecond);

void BM_CascadeEval(benchmark::State& state) {
  const auto op = scalar_op();
  const auto gamma = scalar_gamma();
  const int n = static_cast<int>(state.range(0));
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cascade_eval(op, gamma, x, n));
    x = x < 0.9 ? x + 1e-3 : 0.1;
  }
}
BENCHMARK(BM_CascadeEval)->DenseRange(2, 14, 4);

void BM_ControllerStep(benchmark::State& state) {
  const auto F = controller_net(static_cast<int>(state.range(0)));
  Vec z = embed(0.3);
  for (auto _ : state) {
    z = F(z);
    benchmark::DoNotOptimize(z);
  }
}
BENCHMARK(BM_ControllerStep)->Arg(2)->Arg(3)->Arg(7);

void BM_CompileGallery(benchmark::State& state, const std::string& name, int n) {
  const auto inst = example_instance(name);
  for (auto _ : state) benchmark::DoNotOptimize(inst.compile(n, inst.default_mode));
}
BENCHMARK_CAPTURE(BM_CompileGallery, koch_3, std::string{"koch"}, 3)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_CompileGallery, hilbert_3, std::string{"hilbert"}, 3)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_CompileGallery, gosper_2, std::string{"gosper"}, 2)->Unit(benchmark::kMillisecond);

void BM_VerifyGallery(benchmark::State& state, const std::string& name, int n) {
  const auto inst = example_instance(name);
  const auto c = inst.compile(n, inst.default_mode);
  for (auto _ : state) benchmark::DoNotOptimize(verify(inst, n, inst.default_mode, 1000, 1e-6, &c.net));
}
BENCHMARK_CAPTURE(BM_VerifyGallery, levy_6, std::string{"levy"}, 6)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_VerifyGallery, morton2_2, std::string{"morton:2"}, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
