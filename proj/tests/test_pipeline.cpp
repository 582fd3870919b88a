#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <random>
#include <sys/wait.h>

#include <json.hpp>

#include "postpick/error.hpp"
#include "postpick/pipeline.hpp"
#include "postpick/simulator.hpp"
#include "support/temp_dir.hpp"

using namespace postpick;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string output;
};

RunResult cli(const std::string& args) {
  const std::string cmd = std::string(POSTPICK_CLI) + " --threads 2 " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_config(const fs::path& path) {
  SimulationConfig cfg;
  cfg.image_side = 32;
  cfg.seed = 2024;
  cfg.splits = {{"train", 40, 40}, {"test", 20, 20}};
  write_text_file(path, config_to_json(cfg));
}

/// simulate -> features -> train -> classify -> eval in `dir`.
void run_pipeline(const fs::path& dir) {
  write_config(dir / "cfg.json");
  const fs::path data = dir / "data";
  auto r = cli("simulate --config " + q(dir / "cfg.json") + " --out " + q(data));
  ASSERT_EQ(r.status, 0) << r.output;
  for (const char* split : {"train", "test"}) {
    r = cli("features --manifest " + q(data / (std::string(split) + ".jsonl")) + " --out " +
            q(dir / (std::string(split) + ".csv")));
    ASSERT_EQ(r.status, 0) << r.output;
  }
  r = cli("train --features " + q(dir / "train.csv") + " --k 21 --seed 7 --out " + q(dir / "model.json"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("members: 21"), std::string::npos) << r.output;
  r = cli("classify --model " + q(dir / "model.json") + " --manifest " + q(data / "test.jsonl") + " --out " +
          q(dir / "pred.jsonl"));
  ASSERT_EQ(r.status, 0) << r.output;
  r = cli("eval --pred " + q(dir / "pred.jsonl") + " --truth " + q(data / "test.jsonl") + " --out " +
          q(dir / "report.json") + " --features " + q(dir / "test.csv"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("sensitivity="), std::string::npos);
}

std::vector<FeatureRow> random_rows(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<FeatureRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].path = "img" + std::to_string(i) + ".pgm";
    const bool p = i % 2 == 0;
    rows[i].label = p ? ManifestLabel::kParticle : ManifestLabel::kNonParticle;
    for (auto& v : rows[i].features.values) v = g(rng) + (p ? 0.8 : 0.0);
  }
  return rows;
}

}  // namespace

TEST(Cli, EndToEndIsByteIdentical) {
  testing_support::TempDir a, b;
  run_pipeline(a.path());
  run_pipeline(b.path());
  for (const char* f : {"data/train.ppk", "data/test.jsonl", "train.csv", "test.csv", "model.json", "pred.jsonl",
                        "report.json"}) {
    EXPECT_EQ(read_text_file(a.path() / f), read_text_file(b.path() / f)) << f;
  }
  const auto model = nlohmann::json::parse(read_text_file(a.path() / "model.json"));
  EXPECT_EQ(model["members"].size(), 21u);
  EXPECT_EQ(model["k"], 21);
  EXPECT_TRUE(model["validation"].contains("sensitivity"));

  const auto report = nlohmann::json::parse(read_text_file(a.path() / "report.json"));
  for (const char* key : {"sensitivity", "specificity", "ppv", "npv", "accuracy"}) {
    EXPECT_TRUE(report[key].is_number()) << key;
  }
  EXPECT_EQ(report["tp"].get<int>() + report["fp"].get<int>() + report["tn"].get<int>() + report["fn"].get<int>(), 40);
  EXPECT_EQ(report["auc_per_feature"].size(), kFeatureCount);

  const auto preds = read_predictions(a.path() / "pred.jsonl");
  ASSERT_EQ(preds.size(), 40u);
  EXPECT_EQ(preds[0].path, "test.ppk#0");
  for (const auto& p : preds) {
    EXPECT_EQ(p.margin % 2, 1u);
    EXPECT_EQ(p.predicted == Label::kParticle, p.votes_particle > 10);
  }
}

TEST(Cli, RerunningAStageReproducesItsOutput) {
  testing_support::TempDir dir;
  run_pipeline(dir.path());
  const auto before = read_text_file(dir.path() / "model.json");
  const auto r = cli("train --features " + q(dir.path() / "train.csv") + " --k 21 --seed 7 --out " +
                     q(dir.path() / "model.json"));
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(read_text_file(dir.path() / "model.json"), before);
}

TEST(Cli, TrainOnThousandRowsGivesTwentyOneMembers) {
  testing_support::TempDir dir;
  write_text_file(dir.path() / "f.csv", format_feature_csv(random_rows(1000, 3)));
  const auto r = cli("train --features " + q(dir.path() / "f.csv") + " --k 21 --seed 1 --out " + q(dir.path() / "m.json"));
  ASSERT_EQ(r.status, 0) << r.output;
  const auto model = nlohmann::json::parse(read_text_file(dir.path() / "m.json"));
  EXPECT_EQ(model["members"].size(), 21u);
  EXPECT_EQ(model["schema"].size(), kFeatureCount);
}

TEST(Cli, ExitCodes) {
  testing_support::TempDir dir;
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("bogus").status, 2);
  EXPECT_EQ(cli("train --k 21").status, 2);
  EXPECT_EQ(cli("train --features x.csv --k 20 --out m.json").status, 2);
  EXPECT_EQ(cli("train --features " + q(dir.path() / "missing.csv") + " --out " + q(dir.path() / "m.json")).status, 1);
  write_text_file(dir.path() / "bad.json", "{ not json");
  EXPECT_EQ(cli("simulate --config " + q(dir.path() / "bad.json") + " --out " + q(dir.path() / "o")).status, 1);
  EXPECT_EQ(cli("--help").status, 0);
}

TEST(Predictions, RoundTripAndFormat) {
  const std::vector<Prediction> preds{{"a.ppk#0", Label::kParticle, 5, 13}, {"b.pgm", Label::kNonParticle, 21, 0}};
  const auto text = format_predictions(preds);
  EXPECT_EQ(text.substr(0, text.find('\n')), R"({"path":"a.ppk#0","predicted":"particle","margin":5,"votes_particle":13})");
  EXPECT_EQ(parse_predictions(text), preds);
  EXPECT_THROW(parse_predictions("{\"path\":1}\n"), FormatError);
}

TEST(Evaluate, MatchesByPathAndSkipsUnlabeled) {
  DatasetManifest truth;
  truth.add({"a", ManifestLabel::kParticle, Source::kHand});
  truth.add({"b", ManifestLabel::kNonParticle, Source::kHand});
  truth.add({"c", ManifestLabel::kUnlabeled, Source::kHand});
  const std::vector<Prediction> preds{{"c", Label::kParticle, 1, 11},
                                      {"b", Label::kParticle, 3, 12},
                                      {"a", Label::kParticle, 21, 21}};
  const auto report = evaluate(preds, truth);
  EXPECT_EQ(report.cm, (ConfusionMatrix{1, 1, 0, 0}));
  EXPECT_THROW(evaluate({preds[0], preds[1]}, truth), DataError);
  DatasetManifest none;
  none.add({"c", ManifestLabel::kUnlabeled, Source::kHand});
  EXPECT_THROW(evaluate(preds, none), DataError);
}

TEST(ClassifyRows, SchemaMustMatch) {
  const auto rows = random_rows(200, 4);
  auto data = dataset_from_rows(rows);
  EXPECT_EQ(data.size(), 200u);
  EnsembleOptions opt;
  const auto good = build_ensemble(data, opt).ensemble;
  EXPECT_EQ(classify_rows(good, rows).size(), 200u);
  std::vector<std::string> other = default_schema();
  other[0] = "something_else";
  const auto bad = build_ensemble(data, opt, other).ensemble;
  EXPECT_THROW(classify_rows(bad, rows), ArgumentError);
  auto partial = rows;
  partial[0].label = ManifestLabel::kUnlabeled;
  EXPECT_EQ(dataset_from_rows(partial).size(), 199u);
}
