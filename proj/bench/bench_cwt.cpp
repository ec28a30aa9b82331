// Compares the three transform paths on one segment of Gaussian noise.
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "faultscope/cwt.hpp"

namespace {

std::vector<double> noise(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (auto& v : x) v = nd(rng);
  return x;
}

template <faultscope::Scalogram (*Transform)(std::span<const double>, const faultscope::ScaleGrid&)>
void run(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  const auto grid = faultscope::default_scale_grid(12000.0, static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto s = Transform(x, grid);
    benchmark::DoNotOptimize(s.coefficients.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

} // namespace

BENCHMARK(run<faultscope::cwt_direct>)->Name("cwt_direct")->Args({2048, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(run<faultscope::cwt_fft_serial>)->Name("cwt_fft_serial")
    ->Args({2048, 64})->Args({8192, 64})->Args({2048, 128})->Unit(benchmark::kMillisecond);
BENCHMARK(run<faultscope::cwt_fft>)->Name("cwt_fft")
    ->Args({2048, 64})->Args({8192, 64})->Args({2048, 128})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
