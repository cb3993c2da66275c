#include "mfphase/model.hpp"
#include "mfphase/particle.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

namespace {

mfp::DiffusionModel fhn_model() {
  mfp::VectorFieldSpec f;
  return mfp::DiffusionModel(2, 0.02, mfp::DiagonalMatrix({1.0, 1.0}),
                             mfp::DiagonalMatrix({std::sqrt(0.2), std::sqrt(0.02)}), f);
}

void BM_step_serial(benchmark::State& state) {
  const auto model = fhn_model();
  auto ens = mfp::make_ensemble(model, static_cast<int>(state.range(0)), 0.05, 1, {0.5, 0.2});
  for (auto _ : state) mfp::step_serial(ens, model);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_step_openmp(benchmark::State& state) {
  const auto model = fhn_model();
  auto ens = mfp::make_ensemble(model, static_cast<int>(state.range(0)), 0.05, 1, {0.5, 0.2});
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) mfp::step(ens, model);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_step_serial)->Arg(1000)->Arg(2000)->Arg(8000);
BENCHMARK(BM_step_openmp)->Args({1000, 1})->Args({2000, 1})->Args({8000, 1})->Args({8000, 2})->Args({8000, 4});
BENCHMARK_MAIN();
