#include "postpick/classifier.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "postpick/error.hpp"

namespace postpick {

void Dataset::add(std::span<const double> x, Label label) {
  if (x.size() != dims_) throw ArgumentError("Dataset::add: row has wrong dimensionality");
  values_.insert(values_.end(), x.begin(), x.end());
  labels_.push_back(label);
}

namespace {

// Gini impurity times the node size, from class counts.
double scaled_gini(double non_particle, double particle) {
  const double n = non_particle + particle;
  if (n <= 0) return 0.0;
  return n - (non_particle * non_particle + particle * particle) / n;
}

constexpr double kMinImpurityDecrease = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::size_t min_split) : data_(data), min_split_(min_split) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(rows);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = TreeNode::kLeaf;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  std::size_t grow(std::vector<std::size_t>& rows) {
    std::size_t n_particle = 0;
    for (auto r : rows) n_particle += data_.label(r) == Label::kParticle ? 1 : 0;
    const std::size_t n_non = rows.size() - n_particle;

    const std::size_t index = nodes_.size();
    nodes_.emplace_back();
    {
      TreeNode& node = nodes_.back();
      node.count_particle = n_particle;
      node.count_non_particle = n_non;
      node.label = n_particle > n_non ? Label::kParticle : Label::kNonParticle;
    }
    if (n_particle == 0 || n_non == 0 || rows.size() < min_split_) return index;

    const double m = static_cast<double>(rows.size());
    const double parent = scaled_gini(static_cast<double>(n_non), static_cast<double>(n_particle)) / m;
    const Split best = best_split(rows, static_cast<double>(n_particle));
    if (best.feature == TreeNode::kLeaf || !(best.impurity < parent - kMinImpurityDecrease)) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (data_.value(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[index].feature = best.feature;
    nodes_[index].threshold = best.threshold;
    nodes_[index].left = grow(left);
    nodes_[index].right = grow(right);
    return index;
  }

  Split best_split(const std::vector<std::size_t>& rows, double total_particle) const {
    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    const double m = static_cast<double>(rows.size());
    const double total_non = m - total_particle;
    std::vector<std::pair<double, Label>> column(rows.size());
    for (std::size_t f = 0; f < data_.dims(); ++f) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {data_.value(rows[i], f), data_.label(rows[i])};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_particle = 0.0, left_non = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        (column[i].second == Label::kParticle ? left_particle : left_non) += 1.0;
        const double lo = column[i].first, hi = column[i + 1].first;
        if (!(lo < hi)) continue;
        const double impurity =
            (scaled_gini(left_non, left_particle) + scaled_gini(total_non - left_non, total_particle - left_particle)) /
            m;
        // Ascending sweep with strict comparison keeps the lowest
        // feature index and then the lowest threshold on ties.
        if (impurity < best.impurity) {
          double t = lo + 0.5 * (hi - lo);
          if (!(t < hi)) t = lo;
          best = {static_cast<int>(f), t, impurity};
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  std::size_t min_split_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree::DecisionTree(std::size_t dims, std::vector<TreeNode> nodes) : dims_(dims), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ArgumentError("DecisionTree: no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= dims_) {
      throw ArgumentError("DecisionTree: feature index out of range");
    }
    // Pre-order layout: children strictly after their parent.
    if (n.left <= i || n.right <= i || n.left >= nodes_.size() || n.right >= nodes_.size()) {
      throw ArgumentError("DecisionTree: malformed child links");
    }
  }
}

DecisionTree DecisionTree::train(const Dataset& data, std::span<const std::size_t> rows, std::size_t min_split) {
  if (rows.empty()) throw ArgumentError("train_tree: no samples");
  for (auto r : rows) {
    if (r >= data.size()) throw ArgumentError("train_tree: row index out of range");
  }
  TreeBuilder builder(data, min_split);
  return DecisionTree(data.dims(), builder.build({rows.begin(), rows.end()}));
}

DecisionTree DecisionTree::train(const Dataset& data, std::size_t min_split) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  return train(data, rows, min_split);
}

Label DecisionTree::predict(std::span<const double> x) const {
  if (x.size() != dims_) {
    throw ArgumentError("predict: feature vector has " + std::to_string(x.size()) + " values, tree expects " +
                        std::to_string(dims_));
  }
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].label;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

}  // namespace postpick
