#include <benchmark/benchmark.h>

#include "localize/meanfield.hpp"
#include "localize/models.hpp"

using namespace localize;

static void BM_ExactLogZ(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto model = gen_curie_weiss(n, 1.0).model;
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_log_z(model));
  }
}
BENCHMARK(BM_ExactLogZ)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_MfOptimize(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto model = gen_curie_weiss(n, 1.2).model;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mf_optimize(model, 8, 1e-10, 10000, 1));
  }
}
BENCHMARK(BM_MfOptimize)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
