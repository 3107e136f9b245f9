#include <benchmark/benchmark.h>

#include "localize/localization.hpp"
#include "localize/measure.hpp"
#include "localize/models.hpp"
#include "localize/rng.hpp"

using namespace localize;

namespace {

AtomicMeasure bench_measure(int n) {
  auto gen = gen_curie_weiss(n, 0.8);
  return gibbs_measure(gen.model);
}

}  // namespace

// Cost of one uniform-[1,2]-stopped trial on a 2^n-atom Gibbs measure.
static void BM_RunTrial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto mu = bench_measure(n);
  LocalizationConfig cfg;
  cfg.driver = SymmetricMatrix::identity(n);
  cfg.dt = 1e-3;
  cfg.seed = 1;
  std::uint64_t trial = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_trial(mu, cfg, trial++));
  }
}
BENCHMARK(BM_RunTrial)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_Tilt(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto mu = bench_measure(n);
  auto q = SymmetricMatrix::identity(n);
  Rng rng(5);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(tilt(mu, w, 1.0, q));
  }
}
BENCHMARK(BM_Tilt)->Arg(6)->Arg(10);

BENCHMARK_MAIN();
