#include <random>

#include <benchmark/benchmark.h>

#include "caplab/numerics.hpp"
#include "caplab/rng.hpp"

namespace {

caplab::Mat random_mat(std::size_t r, std::size_t c, std::uint64_t seed) {
  caplab::Rng rng = caplab::make_rng(seed, {r, c});
  std::normal_distribution<double> g;
  caplab::Mat m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

void BM_SpectralNorm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const caplab::Mat m = random_mat(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(caplab::norm(m, caplab::NormKind::spectral));
}
BENCHMARK(BM_SpectralNorm)->Arg(16)->Arg(64)->Arg(256);

void BM_Svd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const caplab::Mat m = random_mat(n, n / 2 + 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(caplab::svd(m));
}
BENCHMARK(BM_Svd)->Arg(8)->Arg(32)->Arg(96);

void BM_SvdTruncate(benchmark::State& state) {
  const caplab::Mat m = random_mat(48, 32, 3);
  for (auto _ : state) benchmark::DoNotOptimize(caplab::svd_truncate(m, 1.0));
}
BENCHMARK(BM_SvdTruncate);

void BM_BallNet(benchmark::State& state) {
  const auto r = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(caplab::ball_net(r, 1.0, 0.5));
}
BENCHMARK(BM_BallNet)->DenseRange(1, 3);

}  // namespace
