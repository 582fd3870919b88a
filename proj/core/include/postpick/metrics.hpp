#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "postpick/manifest.hpp"

namespace postpick {

/// 2x2 contingency table with "particle" as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(Label truth, Label predicted);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted);

/// A ratio whose denominator may be zero. Empty means undefined, which is
/// reported as "n/a" and never coerced to 0 or 1.
using Ratio = std::optional<double>;

struct DerivedMetrics {
  Ratio sensitivity;  // TP / (TP + FN)
  Ratio specificity;  // TN / (TN + FP)
  Ratio ppv;          // TP / (TP + FP)
  Ratio npv;          // TN / (TN + FN)
  Ratio accuracy;     // (TP + TN) / total
};

DerivedMetrics derived_metrics(const ConfusionMatrix& cm);

std::string format_ratio(const Ratio& r, int precision = 4);

/// Mann-Whitney AUC with half credit for ties; higher scores are more
/// particle-like. Throws ArgumentError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const Label> truth);

/// Direction-free discriminatory power: max(auc, 1 - auc).
double separation_auc(std::span<const double> scores, std::span<const Label> truth);

struct EvaluationReport {
  ConfusionMatrix cm;
  DerivedMetrics metrics;
  std::map<std::string, double> auc_per_feature;
};

EvaluationReport make_report(const ConfusionMatrix& cm, std::map<std::string, double> auc_per_feature = {});

/// {tp, fp, tn, fn, sensitivity, specificity, ppv, npv, accuracy,
/// auc_per_feature}; undefined ratios are null.
std::string report_to_json(const EvaluationReport& report);

}  // namespace postpick
