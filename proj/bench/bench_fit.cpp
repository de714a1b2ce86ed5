// Serial reference vs OpenMP fit_pqvar on a synthetic linear-var panel.
#include "pqvar/model.hpp"
#include "pqvar/synth.hpp"

#include <benchmark/benchmark.h>

namespace {

pqvar::ReturnPanel make_panel(int n, int t)
{
  pqvar::synth::ArchetypeSpec spec;
  spec.kind = pqvar::synth::Kind::kLinearVar;
  spec.n = n;
  spec.t = t;
  spec.seed = 11;
  return pqvar::synth::generate(spec);
}

void BM_FitSerial(benchmark::State& state)
{
  const auto panel = make_panel(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pqvar::fit_pqvar_serial(panel));
  }
}

void BM_FitParallel(benchmark::State& state)
{
  const auto panel = make_panel(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pqvar::fit_pqvar(panel));
  }
}

} // namespace

BENCHMARK(BM_FitSerial)->Args({5, 2000})->Args({20, 5000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitParallel)->Args({5, 2000})->Args({20, 5000})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
