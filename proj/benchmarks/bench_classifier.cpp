#include <benchmark/benchmark.h>

#include <random>

#include "postpick/classifier.hpp"

namespace {

postpick::Dataset noisy_dataset(std::size_t n) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  postpick::Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const bool particle = i % 2 == 0;
    postpick::FeatureVector fv;
    for (std::size_t f = 0; f < postpick::kFeatureCount; ++f) fv.values[f] = g(rng) + (particle ? 0.4 : 0.0) * (f % 3);
    d.add(fv, particle ? postpick::Label::kParticle : postpick::Label::kNonParticle);
  }
  return d;
}

void BM_BuildEnsemble(benchmark::State& state) {
  const auto d = noisy_dataset(static_cast<std::size_t>(state.range(0)));
  postpick::EnsembleOptions opt;
  opt.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(postpick::build_ensemble(d, opt));
}
BENCHMARK(BM_BuildEnsemble)->Arg(200)->Arg(1400)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto d = noisy_dataset(1400);
  const auto e = postpick::build_ensemble(d, {}).ensemble;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(e.predict(d.row(i++ % d.size())));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Predict)->Unit(benchmark::kNanosecond);

}  // namespace

BENCHMARK_MAIN();
