#include <benchmark/benchmark.h>

#include "localize/bounds.hpp"
#include "localize/rng.hpp"

using namespace localize;

static void BM_Waterfill(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  Eigen::VectorXd alpha(n);
  for (int i = 0; i < n; ++i) alpha(i) = rng.uniform_open01() * 4.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(waterfill_s(alpha, 0.5 * n));
  }
}
BENCHMARK(BM_Waterfill)->Arg(16)->Arg(256)->Arg(2048);

static void BM_LogdetPlusId(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  Eigen::MatrixXd g(n, n), gg(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g(i, j) = rng.normal();
      gg(i, j) = rng.normal();
    }
  }
  auto c = SymmetricMatrix::from_dense((g * g.transpose() / n).eval(), 1e-8);
  auto l = SymmetricMatrix::from_dense((gg * gg.transpose() / n).eval(), 1e-8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(logdet_plus_id(c, l));
  }
}
BENCHMARK(BM_LogdetPlusId)->Arg(16)->Arg(128);
