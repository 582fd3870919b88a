// Classification throughput: features and prediction for 10,000 cached
// 128 x 128 images in under ten minutes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>

#include "postpick/pipeline.hpp"
#include "postpick/simulator.hpp"
#include "support/temp_dir.hpp"

using namespace postpick;
namespace fs = std::filesystem;

int main() {
  constexpr std::size_t kImages = 10000, kPool = 500, kCopies = kImages / kPool;
  constexpr double kBudgetSeconds = 600.0;
  testing_support::TempDir dir;

  SimulationConfig cfg;
  cfg.seed = 7;
  cfg.image_side = 128;
  cfg.splits = {{"pool", kPool / 2, kPool / 2}};
  write_text_file(dir / "cfg.json", config_to_json(cfg));
  run_simulate(dir / "cfg.json", dir.path());
  run_features(dir / "pool.jsonl", dir / "pool.csv");
  run_train(dir / "pool.csv", 21, 1, dir / "model.json");

  DatasetManifest big;
  for (std::size_t c = 0; c < kCopies; ++c) {
    const std::string name = "copy" + std::to_string(c) + ".ppk";
    fs::copy_file(dir / "pool.ppk", dir / name);
    for (std::size_t i = 0; i < kPool; ++i) big.add({name + "#" + std::to_string(i), ManifestLabel::kUnlabeled});
  }
  big.write(dir / "big.jsonl");

  const auto t0 = std::chrono::steady_clock::now();
  run_classify(dir / "model.json", dir / "big.jsonl", dir / "pred.jsonl");
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::size_t rows = read_predictions(dir / "pred.jsonl").size();

  const bool pass = rows == kImages && elapsed < kBudgetSeconds;
  std::printf("%s classify throughput: %zu images of 128x128 in %.1f s (%.1f ms/image, %u hardware threads) < %.0f s\n",
              pass ? "PASS" : "FAIL", rows, elapsed, 1000.0 * elapsed / kImages, std::thread::hardware_concurrency(),
              kBudgetSeconds);
  return pass ? 0 : 1;
}
