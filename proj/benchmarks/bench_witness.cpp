#include <random>

#include <benchmark/benchmark.h>

#include "caplab/constructions.hpp"
#include "caplab/lipschitz.hpp"
#include "caplab/rng.hpp"

namespace {

void BM_McShaneEvaluate(benchmark::State& state) {
  const auto anchors = static_cast<std::size_t>(state.range(0));
  caplab::Rng rng = caplab::make_rng(5, {anchors});
  std::normal_distribution<double> g;
  std::vector<caplab::Vec> pts(anchors, caplab::Vec(8));
  caplab::Vec vals(anchors);
  for (std::size_t i = 0; i < anchors; ++i) {
    for (double& v : pts[i]) v = g(rng);
    vals[i] = g(rng) * 0.1;
  }
  const auto f = caplab::mcshane_extend(pts, vals, 10.0, caplab::NormKind::euclidean);
  caplab::Vec x(8);
  for (auto _ : state) {
    for (double& v : x) v = g(rng);
    benchmark::DoNotOptimize(f.evaluate(std::span<const double>(x)));
  }
}
BENCHMARK(BM_McShaneEvaluate)->Arg(64)->Arg(1024)->Arg(8192);

void BM_VerifyNonzeroInit(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const caplab::ShatterInstance inst = caplab::nonzero_init_instance(m, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(caplab::verify_shattering(inst, 1));
}
BENCHMARK(BM_VerifyNonzeroInit)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_VerifyConvex(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const caplab::ShatterInstance inst = caplab::convex_instance(m, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(caplab::verify_shattering(inst, 1));
}
BENCHMARK(BM_VerifyConvex)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
