#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "postpick/error.hpp"
#include "postpick/metrics.hpp"
#include "support/oracles.hpp"

using namespace postpick;

namespace {

std::vector<Label> labels(std::size_t particles, std::size_t non_particles) {
  std::vector<Label> out(particles, Label::kParticle);
  out.insert(out.end(), non_particles, Label::kNonParticle);
  return out;
}

std::pair<std::vector<double>, std::vector<Label>> random_scores(std::uint64_t seed, std::size_t n, bool ties) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> coarse(0, 9);
  std::bernoulli_distribution coin(0.4);
  std::vector<double> s(n);
  std::vector<Label> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = coin(rng) ? Label::kParticle : Label::kNonParticle;
    s[i] = ties ? coarse(rng) + (t[i] == Label::kParticle ? 1 : 0) : g(rng) + (t[i] == Label::kParticle ? 0.7 : 0.0);
  }
  t[0] = Label::kParticle;
  t[1] = Label::kNonParticle;
  return {s, t};
}

}  // namespace

TEST(Confusion, PerfectAgreement) {
  const auto t = labels(10, 10);
  EXPECT_EQ(confusion(t, t), (ConfusionMatrix{10, 0, 10, 0}));
}

TEST(Confusion, AllPredictedParticle) {
  EXPECT_EQ(confusion(labels(10, 10), labels(20, 0)), (ConfusionMatrix{10, 10, 0, 0}));
}

TEST(Confusion, MatchesCountingOracle) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.5);
  std::vector<Label> t(1000), p(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    t[i] = coin(rng) ? Label::kParticle : Label::kNonParticle;
    p[i] = coin(rng) ? Label::kParticle : Label::kNonParticle;
  }
  const auto cm = confusion(t, p);
  const auto want = oracle::count_outcomes(t, p);
  EXPECT_EQ(cm.tp, want.tp);
  EXPECT_EQ(cm.fp, want.fp);
  EXPECT_EQ(cm.tn, want.tn);
  EXPECT_EQ(cm.fn, want.fn);
  EXPECT_EQ(cm.total(), 1000u);
}

TEST(Confusion, LengthMismatchAndEmpty) {
  EXPECT_THROW(confusion(labels(2, 0), labels(3, 0)), ArgumentError);
  EXPECT_THROW(confusion(std::vector<Label>{}, std::vector<Label>{}), ArgumentError);
}

TEST(DerivedMetrics, AllScenarioRow) {
  const auto m = derived_metrics({794, 257, 743, 206});
  EXPECT_NEAR(*m.sensitivity, 0.794, 1e-12);
  EXPECT_NEAR(*m.specificity, 0.743, 1e-12);
  EXPECT_NEAR(*m.ppv, 794.0 / 1051.0, 1e-12);
  EXPECT_NEAR(*m.ppv, 0.7555, 1e-4);
  EXPECT_NEAR(*m.npv, 743.0 / 949.0, 1e-12);
  EXPECT_NEAR(*m.accuracy, 0.7685, 1e-12);
}

TEST(DerivedMetrics, ZeroDenominatorIsUndefined) {
  const auto m = derived_metrics({0, 0, 10, 0});
  EXPECT_FALSE(m.sensitivity.has_value());
  EXPECT_FALSE(m.ppv.has_value());
  EXPECT_EQ(*m.specificity, 1.0);
  EXPECT_EQ(*m.npv, 1.0);
  EXPECT_EQ(*m.accuracy, 1.0);
  EXPECT_EQ(format_ratio(m.sensitivity), "n/a");
  EXPECT_FALSE(derived_metrics({}).accuracy.has_value());
}

TEST(DerivedMetrics, SymmetricTable) {
  const auto m = derived_metrics({5, 5, 5, 5});
  for (const auto& r : {m.sensitivity, m.specificity, m.ppv, m.npv, m.accuracy}) EXPECT_EQ(*r, 0.5);
}

TEST(DerivedMetrics, AccuracyIsExact) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> d(0, 5000);
  for (int i = 0; i < 200; ++i) {
    const ConfusionMatrix cm{d(rng), d(rng), d(rng), d(rng) + 1};
    EXPECT_EQ(*derived_metrics(cm).accuracy,
              static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.tp + cm.fp + cm.tn + cm.fn));
  }
}

TEST(RocAuc, PerfectAndTied) {
  const auto t = labels(5, 5);
  const std::vector<double> perfect{9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
  EXPECT_EQ(roc_auc(perfect, t), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>(10, 3.0), t), 0.5);
  EXPECT_THROW(roc_auc(perfect, labels(10, 0)), ArgumentError);
  EXPECT_THROW(roc_auc(std::vector<double>{1.0}, labels(1, 1)), ArgumentError);
}

TEST(RocAuc, MatchesTrapezoidOracle) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto [s, t] = random_scores(seed, 200, seed % 2 == 1);
    EXPECT_NEAR(roc_auc(s, t), oracle::trapezoid_auc(s, t), 1e-12) << "seed " << seed;
  }
}

TEST(RocAuc, NegationComplements) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [s, t] = random_scores(100 + seed, 150, seed % 2 == 0);
    const double a = roc_auc(s, t);
    for (auto& v : s) v = -v;
    EXPECT_NEAR(roc_auc(s, t), 1.0 - a, 1e-12);
  }
}

TEST(RocAuc, MonotoneTransformInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [s, t] = random_scores(200 + seed, 150, seed % 2 == 0);
    const double a = roc_auc(s, t);
    for (auto& v : s) v = std::exp(3.0 * v) + 2.0;
    EXPECT_EQ(roc_auc(s, t), a);
  }
}

TEST(RocAuc, SeparationIsDirectionFree) {
  const auto t = labels(5, 5);
  const std::vector<double> reversed{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_EQ(roc_auc(reversed, t), 0.0);
  EXPECT_EQ(separation_auc(reversed, t), 1.0);
}

TEST(Report, JsonFields) {
  const auto report = make_report({0, 0, 10, 0}, {{"blob_fraction", 0.75}});
  const auto j = nlohmann::json::parse(report_to_json(report));
  EXPECT_EQ(j["tp"], 0);
  EXPECT_EQ(j["tn"], 10);
  EXPECT_TRUE(j["sensitivity"].is_null());
  EXPECT_TRUE(j["ppv"].is_null());
  EXPECT_EQ(j["specificity"], 1.0);
  EXPECT_EQ(j["accuracy"], 1.0);
  EXPECT_EQ(j["auc_per_feature"]["blob_fraction"], 0.75);
  for (const char* key : {"fp", "fn", "npv"}) EXPECT_TRUE(j.contains(key));
}
