#include <benchmark/benchmark.h>

#include "postpick/features.hpp"
#include "postpick/filters.hpp"
#include "postpick/phase_symmetry.hpp"
#include "postpick/simulator.hpp"

namespace {

postpick::WindowedImage sample_image(std::size_t side) {
  postpick::SimulationConfig cfg;
  cfg.image_side = side;
  cfg.seed = 3;
  cfg.splits = {{"bench", 1, 0}};
  return postpick::Simulator(cfg).generate(0, std::nullopt).image;
}

void BM_ExtractFeatures(benchmark::State& state) {
  const auto img = sample_image(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(postpick::extract_features(img));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ExtractFeatures)->Arg(64)->Arg(80)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_PhaseSymmetry(benchmark::State& state) {
  const auto img = sample_image(static_cast<std::size_t>(state.range(0)));
  const postpick::PhaseSymmetryParams params;
  for (auto _ : state) benchmark::DoNotOptimize(postpick::phase_symmetry(img, params));
}
BENCHMARK(BM_PhaseSymmetry)->Arg(80)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Canny(benchmark::State& state) {
  const auto img = sample_image(static_cast<std::size_t>(state.range(0)));
  const postpick::CannyParams params;
  for (auto _ : state) benchmark::DoNotOptimize(postpick::canny(img, params));
}
BENCHMARK(BM_Canny)->Arg(80)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Otsu(benchmark::State& state) {
  const auto img = sample_image(128);
  for (auto _ : state) benchmark::DoNotOptimize(postpick::otsu_threshold(img));
}
BENCHMARK(BM_Otsu)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
