#include <benchmark/benchmark.h>

#include "caplab/complexity.hpp"
#include "caplab/constructions.hpp"

namespace {

void BM_RademacherEnumerate(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const caplab::FiniteClass cls = caplab::finite_class_from_instance(caplab::nonzero_init_instance(m, 0.25), 1);
  for (auto _ : state) benchmark::DoNotOptimize(caplab::rademacher_mc(cls, 10000, 7, std::nullopt, 1));
}
BENCHMARK(BM_RademacherEnumerate)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_RademacherClosedForm(benchmark::State& state) {
  std::vector<caplab::Vec> pts(static_cast<std::size_t>(state.range(0)), caplab::Vec(16, 0.25));
  for (auto _ : state) benchmark::DoNotOptimize(caplab::rademacher_linear_closed_form(pts, 1.0, 10000, 3, 1));
}
BENCHMARK(BM_RademacherClosedForm)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_DudleyBound(benchmark::State& state) {
  auto log_cover = [](double tau) { return 1.0 / (tau * tau); };
  for (auto _ : state) benchmark::DoNotOptimize(caplab::dudley_bound(log_cover, 1.0, 1000.0));
}
BENCHMARK(BM_DudleyBound);

void BM_EmpiricalCover(benchmark::State& state) {
  const caplab::FiniteClass cls = caplab::finite_class_from_instance(caplab::nonzero_init_instance(8, 0.25), 1);
  for (auto _ : state) benchmark::DoNotOptimize(caplab::empirical_cover(cls.table, 0.3));
}
BENCHMARK(BM_EmpiricalCover)->Unit(benchmark::kMillisecond);

}  // namespace
