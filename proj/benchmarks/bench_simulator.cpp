#include <benchmark/benchmark.h>

#include "postpick/simulator.hpp"

namespace {

postpick::SimulationConfig config(std::size_t side) {
  postpick::SimulationConfig cfg;
  cfg.image_side = side;
  cfg.seed = 5;
  cfg.splits = {{"bench", 1000, 1000}};
  return cfg;
}

void BM_Generate(benchmark::State& state) {
  const postpick::Simulator sim(config(static_cast<std::size_t>(state.range(0))));
  std::uint64_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim.generate(index++ % 2000, std::nullopt));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Generate)->Arg(64)->Arg(80)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Project(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto vol = postpick::make_volume(postpick::TemplateKind::kParticleProxy, side, 1);
  std::mt19937_64 rng(9);
  for (auto _ : state) benchmark::DoNotOptimize(postpick::project(vol, postpick::random_rotation(rng), side));
}
BENCHMARK(BM_Project)->Arg(80)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ApplyCtf(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto img = postpick::project(postpick::make_volume(postpick::TemplateKind::kSphere, side, 0),
                                     postpick::Rotation::identity(), side);
  const postpick::CtfParams ctf;
  for (auto _ : state) benchmark::DoNotOptimize(postpick::apply_ctf(img, ctf));
}
BENCHMARK(BM_ApplyCtf)->Arg(80)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
