#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "postpick/features.hpp"
#include "postpick/manifest.hpp"
#include "postpick/metrics.hpp"

namespace postpick {

/// Row-major design matrix with binary labels. Dimensionality is free so
/// the learners can be exercised on toy data as well as on FeatureVectors.
class Dataset {
 public:
  explicit Dataset(std::size_t dims = kFeatureCount) : dims_(dims) {}

  void add(std::span<const double> x, Label label);
  void add(const FeatureVector& fv, Label label) { add(std::span<const double>(fv.values), label); }

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return labels_.size(); }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * dims_, dims_}; }
  double value(std::size_t i, std::size_t feature) const { return values_[i * dims_ + feature]; }
  Label label(std::size_t i) const { return labels_[i]; }
  std::span<const Label> labels() const { return labels_; }

  /// Applies f to one column in place.
  template <typename F>
  void transform_column(std::size_t feature, F&& f) {
    for (std::size_t i = 0; i < size(); ++i) values_[i * dims_ + feature] = f(values_[i * dims_ + feature]);
  }

 private:
  std::size_t dims_;
  std::vector<double> values_;
  std::vector<Label> labels_;
};

/// Flattened binary tree, root at index 0, stored in pre-order.
struct TreeNode {
  static constexpr int kLeaf = -1;

  int feature = kLeaf;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  Label label = Label::kNonParticle;
  std::size_t count_non_particle = 0;
  std::size_t count_particle = 0;

  bool is_leaf() const { return feature == kLeaf; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// CART classifier: greedy weighted-Gini splits at midpoints between sorted
/// distinct values, no pruning. Routing sends value <= threshold left.
class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::size_t dims, std::vector<TreeNode> nodes);

  /// Trains on the rows listed in `rows` (repeats allowed, for bootstrap
  /// resamples). Nodes stop splitting when pure, when holding fewer than
  /// `min_split` rows, or when no split strictly lowers impurity. Leaf
  /// ties go to non_particle; split ties to the lowest feature index and
  /// then the lowest threshold.
  static DecisionTree train(const Dataset& data, std::span<const std::size_t> rows, std::size_t min_split);
  static DecisionTree train(const Dataset& data, std::size_t min_split);

  /// Throws ArgumentError if x has the wrong dimensionality.
  Label predict(std::span<const double> x) const;
  Label predict(const FeatureVector& fv) const { return predict(std::span<const double>(fv.values)); }

  std::size_t dims() const { return dims_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t dims_ = 0;
  std::vector<TreeNode> nodes_;
};

/// One learner in the per-round candidate pool.
struct CandidateSpec {
  std::size_t min_split = 10;
  bool bootstrap = false;
};

/// min_split 5, 10 and 20 on the round's training rows, plus two
/// min_split 10 trees on bootstrap resamples of them.
std::vector<CandidateSpec> default_candidate_pool();

struct EnsembleOptions {
  std::size_t k = 21;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  /// Round-train : round-test ratio is (test_denominator - 1) : 1.
  std::size_t test_denominator = 5;
  std::vector<CandidateSpec> pool = default_candidate_pool();
  std::size_t min_samples = 50;
  std::size_t threads = 0;
};

struct RoundReport {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  /// Resampled row lists, one per bootstrap candidate in pool order.
  std::vector<std::vector<std::size_t>> bootstrap;
  std::vector<double> candidate_errors;
  std::size_t selected = 0;
};

/// Every random draw made while building an ensemble.
struct SplitReport {
  std::uint64_t seed = 0;
  std::vector<std::size_t> validation;
  std::vector<RoundReport> rounds;
};

struct ValidationReport {
  ConfusionMatrix cm;
  Ratio sensitivity;
  Ratio specificity;
  Ratio accuracy;
  /// Accuracy of each member on its own, in member order.
  std::vector<double> member_accuracy;
};

struct Vote {
  Label label = Label::kNonParticle;
  std::size_t margin = 0;
  std::size_t votes_particle = 0;
};

/// Odd-sized committee of trees combined by majority vote.
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(std::vector<std::string> schema, std::vector<DecisionTree> members, std::uint64_t seed,
           ValidationReport validation);

  Vote predict(std::span<const double> x) const;
  Vote predict(const FeatureVector& fv) const { return predict(std::span<const double>(fv.values)); }

  std::size_t k() const { return members_.size(); }
  const std::vector<std::string>& schema() const { return schema_; }
  const std::vector<DecisionTree>& members() const { return members_; }
  std::uint64_t seed() const { return seed_; }
  const ValidationReport& validation() const { return validation_; }

 private:
  std::vector<std::string> schema_;
  std::vector<DecisionTree> members_;
  std::uint64_t seed_ = 0;
  ValidationReport validation_;
};

struct EnsembleResult {
  Ensemble ensemble;
  SplitReport splits;
};

/// Hold out a stratified validation share, then for each of k rounds split
/// the rest at random, fit the candidate pool on the round's training rows
/// and keep the candidate with the lowest round-test error (ties to the
/// earlier candidate). Bitwise reproducible in (data, options).
/// `schema` names the columns; it defaults to the feature schema when the
/// data has that many columns.
EnsembleResult build_ensemble(const Dataset& data, const EnsembleOptions& options,
                              std::vector<std::string> schema = {});

/// Model file round trip (JSON).
std::string ensemble_to_json(const Ensemble& ensemble);
Ensemble ensemble_from_json(std::string_view text);
void save_ensemble(const std::filesystem::path& path, const Ensemble& ensemble);
Ensemble load_ensemble(const std::filesystem::path& path);

}  // namespace postpick
