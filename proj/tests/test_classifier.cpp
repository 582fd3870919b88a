#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "postpick/classifier.hpp"
#include "postpick/error.hpp"
#include "support/temp_dir.hpp"

using namespace postpick;

namespace {

Dataset xor_clusters() {
  Dataset d(2);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.1);
  for (int cx : {-1, 1}) {
    for (int cy : {-1, 1}) {
      const Label l = cx * cy > 0 ? Label::kParticle : Label::kNonParticle;
      for (int i = 0; i < 25; ++i) {
        const double x[2] = {cx + g(rng), cy + g(rng)};
        d.add(x, l);
      }
    }
  }
  return d;
}

/// Noisy two-class data: class shifts every feature by `shift`, then a
/// `flip` share of labels is inverted.
Dataset noisy(std::uint64_t seed, std::size_t n, std::size_t dims, double shift, double flip) {
  Dataset d(dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::bernoulli_distribution coin(0.5), flipper(flip);
  std::vector<double> x(dims);
  for (std::size_t i = 0; i < n; ++i) {
    const bool particle = coin(rng);
    for (auto& v : x) v = g(rng) + (particle ? shift : 0.0);
    const bool label = flipper(rng) ? !particle : particle;
    d.add(x, label ? Label::kParticle : Label::kNonParticle);
  }
  return d;
}

DecisionTree leaf(std::size_t dims, Label l) {
  TreeNode n;
  n.label = l;
  return DecisionTree(dims, {n});
}

}  // namespace

TEST(DecisionTree, SingleLabelGivesLeaf) {
  Dataset d(3);
  for (int i = 0; i < 10; ++i) {
    const double x[3] = {double(i), double(-i), 1.0};
    d.add(x, Label::kParticle);
  }
  const auto tree = DecisionTree::train(d, 2);
  EXPECT_EQ(tree.nodes().size(), 1u);
  const double probe[3] = {100, 100, 100};
  EXPECT_EQ(tree.predict(probe), Label::kParticle);
}

TEST(DecisionTree, SeparableOneDimension) {
  Dataset d(1);
  for (int i = 1; i <= 20; ++i) {
    const double neg[1] = {-0.1 * i}, pos[1] = {0.1 * i};
    d.add(neg, Label::kNonParticle);
    d.add(pos, Label::kParticle);
  }
  const auto tree = DecisionTree::train(d, 2);
  EXPECT_EQ(tree.depth(), 1u);
  EXPECT_EQ(tree.nodes()[0].threshold, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(tree.predict(d.row(i)), d.label(i));
}

TEST(DecisionTree, XorNeedsDepthTwo) {
  const auto d = xor_clusters();
  const auto tree = DecisionTree::train(d, 2);
  EXPECT_GE(tree.depth(), 2u);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) correct += tree.predict(d.row(i)) == d.label(i) ? 1 : 0;
  EXPECT_EQ(correct, d.size());
}

TEST(DecisionTree, BoundaryGoesLeft) {
  TreeNode root, left, right;
  root.feature = 0;
  root.threshold = 0.0;
  root.left = 1;
  root.right = 2;
  left.label = Label::kNonParticle;
  right.label = Label::kParticle;
  const DecisionTree tree(1, {root, left, right});
  const double at[1] = {0.0}, below[1] = {-1.0}, above[1] = {1e-300};
  EXPECT_EQ(tree.predict(at), Label::kNonParticle);
  EXPECT_EQ(tree.predict(below), Label::kNonParticle);
  EXPECT_EQ(tree.predict(above), Label::kParticle);
}

TEST(DecisionTree, LeafTieGoesNonParticle) {
  Dataset d(1);
  const double x[1] = {1.0};
  d.add(x, Label::kParticle);
  d.add(x, Label::kNonParticle);
  EXPECT_EQ(DecisionTree::train(d, 2).predict(x), Label::kNonParticle);
}

TEST(DecisionTree, StructuralInvariants) {
  const auto d = noisy(11, 300, 4, 0.8, 0.1);
  const auto tree = DecisionTree::train(d, 5);
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) continue;
    EXPECT_LT(static_cast<std::size_t>(n.feature), d.dims());
    EXPECT_LT(n.left, tree.nodes().size());
    EXPECT_LT(n.right, tree.nodes().size());
  }
}

TEST(DecisionTree, ErrorsOnEmptyAndWrongDims) {
  Dataset d(2);
  EXPECT_THROW(DecisionTree::train(d, 2), ArgumentError);
  const auto tree = DecisionTree::train(xor_clusters(), 2);
  const double x[3] = {0, 0, 0};
  EXPECT_THROW(tree.predict(std::span<const double>(x, 3)), ArgumentError);
}

TEST(DecisionTree, MonotoneColumnTransformKeepsDecisions) {
  // Feature values on an integer grid, so every probe value occurs in training.
  Dataset d(3);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> grid(0, 9);
  std::bernoulli_distribution flip(0.2);
  for (int i = 0; i < 600; ++i) {
    const double x[3] = {double(grid(rng)), double(grid(rng)), double(grid(rng))};
    const bool p = x[0] + x[1] > 9;
    d.add(x, p != flip(rng) ? Label::kParticle : Label::kNonParticle);
  }
  Dataset t = d;
  t.transform_column(1, [](double v) { return std::exp(v) - 4.0; });
  const auto a = DecisionTree::train(d, 5);
  const auto b = DecisionTree::train(t, 5);
  EXPECT_EQ(a.nodes().size(), b.nodes().size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(a.predict(d.row(i)), b.predict(t.row(i)));
}

TEST(Ensemble, SeparableDataValidatesPerfectly) {
  const auto d = noisy(1, 200, 3, 20.0, 0.0);
  EnsembleOptions opt;
  opt.seed = 3;
  const auto res = build_ensemble(d, opt, {"a", "b", "c"});
  EXPECT_EQ(res.ensemble.k(), 21u);
  EXPECT_EQ(*res.ensemble.validation().sensitivity, 1.0);
  EXPECT_EQ(*res.ensemble.validation().specificity, 1.0);
}

TEST(Ensemble, SingleMemberMatchesItsTree) {
  const auto d = noisy(2, 300, 4, 0.5, 0.0);
  EnsembleOptions opt;
  opt.k = 1;
  const auto e = build_ensemble(d, opt, {"a", "b", "c", "d"}).ensemble;
  const auto probes = noisy(99, 500, 4, 0.5, 0.0);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto v = e.predict(probes.row(i));
    EXPECT_EQ(v.label, e.members()[0].predict(probes.row(i)));
    EXPECT_EQ(v.margin, 1u);
  }
}

TEST(Ensemble, VoteCountsAndMargins) {
  std::vector<DecisionTree> members;
  for (int i = 0; i < 21; ++i) members.push_back(leaf(1, i < 11 ? Label::kParticle : Label::kNonParticle));
  const double x[1] = {0};
  const Ensemble split({"f"}, members, 0, {});
  EXPECT_EQ(split.predict(x).label, Label::kParticle);
  EXPECT_EQ(split.predict(x).margin, 1u);
  EXPECT_EQ(split.predict(x).votes_particle, 11u);
  std::vector<DecisionTree> same(21, leaf(1, Label::kNonParticle));
  const Ensemble unanimous({"f"}, same, 0, {});
  EXPECT_EQ(unanimous.predict(x).label, Label::kNonParticle);
  EXPECT_EQ(unanimous.predict(x).margin, 21u);
  members.pop_back();
  EXPECT_THROW(Ensemble({"f"}, members, 0, {}), ArgumentError);
  EXPECT_THROW(Ensemble({"f", "g"}, same, 0, {}), ArgumentError);
  const double wrong[2] = {0, 0};
  EXPECT_THROW(unanimous.predict(std::span<const double>(wrong, 2)), ArgumentError);
}

TEST(Ensemble, RandomTreesGiveOddMargins) {
  std::vector<DecisionTree> members;
  for (std::uint64_t s = 0; s < 21; ++s) members.push_back(DecisionTree::train(noisy(s, 80, 3, 0.3, 0.3), 2));
  const Ensemble e({"a", "b", "c"}, members, 0, {});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double x[3] = {g(rng), g(rng), g(rng)};
    const auto v = e.predict(x);
    EXPECT_EQ(v.margin % 2, 1u);
    const std::size_t against = 21 - v.votes_particle;
    EXPECT_EQ(v.margin, v.votes_particle > against ? v.votes_particle - against : against - v.votes_particle);
    EXPECT_EQ(v.label == Label::kParticle, v.votes_particle > 10);
  }
}

TEST(Ensemble, SplitReportIsDisjointAndFourToOne) {
  const auto d = noisy(4, 537, 3, 0.6, 0.1);
  EnsembleOptions opt;
  opt.seed = 17;
  const auto res = build_ensemble(d, opt, {"a", "b", "c"});
  const auto& sr = res.splits;
  EXPECT_EQ(sr.seed, 17u);
  const std::set<std::size_t> val(sr.validation.begin(), sr.validation.end());
  EXPECT_EQ(val.size(), sr.validation.size());
  EXPECT_NEAR(static_cast<double>(val.size()), 0.1 * d.size(), 2.0);
  std::size_t val_particles = 0;
  for (auto r : val) val_particles += d.label(r) == Label::kParticle ? 1 : 0;
  EXPECT_GT(val_particles, 0u);
  EXPECT_LT(val_particles, val.size());
  ASSERT_EQ(sr.rounds.size(), 21u);
  for (const auto& round : sr.rounds) {
    std::set<std::size_t> seen;
    for (auto r : round.train) {
      EXPECT_FALSE(val.count(r));
      seen.insert(r);
    }
    for (auto r : round.test) {
      EXPECT_FALSE(val.count(r));
      EXPECT_FALSE(seen.count(r));
    }
    const std::size_t rest = d.size() - val.size();
    EXPECT_EQ(round.train.size() + round.test.size(), rest);
    EXPECT_LE(std::abs(static_cast<double>(round.test.size()) - rest / 5.0), 1.0);
    for (const auto& b : round.bootstrap) {
      EXPECT_EQ(b.size(), round.train.size());
      for (auto r : b) EXPECT_TRUE(std::binary_search(round.train.begin(), round.train.end(), r));
    }
  }
}

TEST(Ensemble, SelectsLowestRoundTestError) {
  const auto d = noisy(6, 400, 4, 0.5, 0.2);
  EnsembleOptions opt;
  opt.seed = 2;
  const auto res = build_ensemble(d, opt, {"a", "b", "c", "d"});
  const auto pool = default_candidate_pool();
  ASSERT_EQ(pool.size(), 5u);
  for (std::size_t r = 0; r < res.splits.rounds.size(); ++r) {
    const auto& round = res.splits.rounds[r];
    ASSERT_EQ(round.candidate_errors.size(), 5u);
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_LE(round.candidate_errors[round.selected], round.candidate_errors[c]);
      if (c < round.selected) {
        EXPECT_LT(round.candidate_errors[round.selected], round.candidate_errors[c]);
      }
    }
    // Retraining the selected candidate reproduces the member and its error.
    std::size_t boot = 0;
    for (std::size_t c = 0; c < round.selected; ++c) boot += pool[c].bootstrap ? 1 : 0;
    const auto& rows = pool[round.selected].bootstrap ? round.bootstrap[boot] : round.train;
    const auto tree = DecisionTree::train(d, rows, pool[round.selected].min_split);
    EXPECT_EQ(tree, res.ensemble.members()[r]);
    std::size_t wrong = 0;
    for (auto i : round.test) wrong += tree.predict(d.row(i)) != d.label(i) ? 1 : 0;
    EXPECT_EQ(round.candidate_errors[round.selected], static_cast<double>(wrong) / round.test.size());
  }
}

TEST(Ensemble, BitwiseDeterministicAcrossThreadCounts) {
  const auto d = noisy(7, 500, 5, 0.4, 0.2);
  EnsembleOptions opt;
  opt.seed = 1234;
  opt.threads = 1;
  const auto a = build_ensemble(d, opt, {"a", "b", "c", "d", "e"});
  opt.threads = 4;
  const auto b = build_ensemble(d, opt, {"a", "b", "c", "d", "e"});
  EXPECT_EQ(ensemble_to_json(a.ensemble), ensemble_to_json(b.ensemble));
  EXPECT_EQ(a.splits.validation, b.splits.validation);
  for (std::size_t r = 0; r < 21; ++r) {
    EXPECT_EQ(a.splits.rounds[r].train, b.splits.rounds[r].train);
    EXPECT_EQ(a.splits.rounds[r].candidate_errors, b.splits.rounds[r].candidate_errors);
  }
  opt.seed = 1235;
  EXPECT_NE(build_ensemble(d, opt, {"a", "b", "c", "d", "e"}).splits.validation, a.splits.validation);
}

TEST(Ensemble, RejectsBadInput) {
  EnsembleOptions opt;
  auto d = noisy(8, 49, 2, 1.0, 0.0);
  EXPECT_THROW(build_ensemble(d, opt, {"a", "b"}), ArgumentError);
  Dataset one(2);
  for (int i = 0; i < 60; ++i) {
    const double x[2] = {double(i), 0};
    one.add(x, Label::kParticle);
  }
  EXPECT_THROW(build_ensemble(one, opt, {"a", "b"}), ArgumentError);
  d = noisy(8, 100, 2, 1.0, 0.0);
  opt.k = 20;
  EXPECT_THROW(build_ensemble(d, opt, {"a", "b"}), ArgumentError);
  opt.k = 21;
  EXPECT_THROW(build_ensemble(d, opt, {"a"}), ArgumentError);
}

TEST(ModelFile, RoundTripPreservesPredictions) {
  const auto d = noisy(9, 400, kFeatureCount, 0.4, 0.1);
  EnsembleOptions opt;
  opt.seed = 5;
  const auto e = build_ensemble(d, opt).ensemble;
  EXPECT_EQ(e.schema(), default_schema());
  testing_support::TempDir dir;
  save_ensemble(dir.path() / "model.json", e);
  const auto back = load_ensemble(dir.path() / "model.json");
  EXPECT_EQ(back.k(), 21u);
  EXPECT_EQ(back.seed(), 5u);
  EXPECT_EQ(back.schema(), e.schema());
  EXPECT_EQ(back.validation().sensitivity, e.validation().sensitivity);
  EXPECT_EQ(back.validation().specificity, e.validation().specificity);
  EXPECT_EQ(ensemble_to_json(back), ensemble_to_json(e));
  const auto probes = noisy(10, 1000, kFeatureCount, 0.4, 0.0);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto a = e.predict(probes.row(i)), b = back.predict(probes.row(i));
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.margin, b.margin);
  }
}

TEST(ModelFile, MalformedInputIsRejected) {
  EXPECT_THROW(ensemble_from_json("not json"), FormatError);
  EXPECT_THROW(ensemble_from_json(R"({"schema":["a"],"k":2,"seed":0,"members":[]})"), FormatError);
}
