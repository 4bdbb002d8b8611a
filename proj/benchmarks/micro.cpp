#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "driftlab/addm.hpp"
#include "driftlab/baselines.hpp"
#include "driftlab/random.hpp"
#include "driftlab/series.hpp"
#include "driftlab/setar.hpp"
#include "driftlab/streams.hpp"

namespace {

driftlab::ErrorSeries noisy_step(std::size_t n, std::uint64_t seed) {
  driftlab::Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    v[t] = (t < n / 2 ? 0.1 : 0.4) + noise(rng);
  }
  return driftlab::make_series(std::move(v));
}

void BM_FitTar(benchmark::State& state) {
  const auto series = noisy_step(static_cast<std::size_t>(state.range(0)), 42);
  driftlab::TarConfig cfg;  // p = 5, d = 2, time-index thresholds
  for (auto _ : state) {
    benchmark::DoNotOptimize(driftlab::fit_tar(series, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitTar)->Arg(200)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitTarTested(benchmark::State& state) {
  const auto series = noisy_step(500, 43);
  driftlab::TarConfig cfg;
  cfg.bootstrap_reps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(driftlab::fit_tar_tested(series, cfg, 7));
  }
}
BENCHMARK(BM_FitTarTested)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_AddmObserve(benchmark::State& state) {
  const auto validation = noisy_step(400, 44).slice(0, 200);  // flat segment only
  driftlab::AddmConfig cfg;
  cfg.window = static_cast<int>(state.range(0));
  driftlab::AddmDetector det(validation, cfg);
  driftlab::Rng rng(45);
  std::normal_distribution<double> noise(0.1, 0.05);
  for (auto _ : state) {
    benchmark::DoNotOptimize(det.observe(noise(rng)));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AddmObserve)->Arg(500)->Arg(1000)->Arg(2000);

void BM_AdwinObserve(benchmark::State& state) {
  driftlab::AdwinDetector det(0.002);
  driftlab::Rng rng(46);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(det.observe(noise(rng)));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AdwinObserve);

void BM_Generate(benchmark::State& state) {
  driftlab::GeneratorSpec spec;
  spec.family = driftlab::StreamFamily::Mixed;
  spec.n_samples = state.range(0);
  spec.seed = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(driftlab::generate(spec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
