#include "postpick/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "postpick/error.hpp"

namespace postpick {

void ConfusionMatrix::add(Label truth, Label predicted) {
  const bool t = truth == Label::kParticle;
  const bool p = predicted == Label::kParticle;
  if (t && p) ++tp;
  else if (!t && p) ++fp;
  else if (!t && !p) ++tn;
  else ++fn;
}

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) throw ArgumentError("confusion: length mismatch");
  if (truth.empty()) throw ArgumentError("confusion: no samples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

namespace {

Ratio ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json ratio_json(const Ratio& r) {
  return r ? nlohmann::ordered_json(*r) : nlohmann::ordered_json(nullptr);
}

}  // namespace

DerivedMetrics derived_metrics(const ConfusionMatrix& cm) {
  return {ratio(cm.tp, cm.tp + cm.fn), ratio(cm.tn, cm.tn + cm.fp), ratio(cm.tp, cm.tp + cm.fp),
          ratio(cm.tn, cm.tn + cm.fn), ratio(cm.tp + cm.tn, cm.total())};
}

std::string format_ratio(const Ratio& r, int precision) {
  if (!r) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *r);
  return buf;
}

double roc_auc(std::span<const double> scores, std::span<const Label> truth) {
  if (scores.size() != truth.size()) throw ArgumentError("roc_auc: length mismatch");
  const auto n_pos = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), Label::kParticle));
  const std::size_t n_neg = truth.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ArgumentError("roc_auc: both classes must be present");

  // Rank-sum form: tied groups share their average rank, which is exactly
  // the half-credit pair count.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (truth[order[k]] == Label::kParticle) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

double separation_auc(std::span<const double> scores, std::span<const Label> truth) {
  const double auc = roc_auc(scores, truth);
  return std::max(auc, 1.0 - auc);
}

EvaluationReport make_report(const ConfusionMatrix& cm, std::map<std::string, double> auc_per_feature) {
  return {cm, derived_metrics(cm), std::move(auc_per_feature)};
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["tp"] = report.cm.tp;
  j["fp"] = report.cm.fp;
  j["tn"] = report.cm.tn;
  j["fn"] = report.cm.fn;
  j["sensitivity"] = ratio_json(report.metrics.sensitivity);
  j["specificity"] = ratio_json(report.metrics.specificity);
  j["ppv"] = ratio_json(report.metrics.ppv);
  j["npv"] = ratio_json(report.metrics.npv);
  j["accuracy"] = ratio_json(report.metrics.accuracy);
  j["auc_per_feature"] = nlohmann::ordered_json::object();
  for (const auto& [name, auc] : report.auc_per_feature) j["auc_per_feature"][name] = auc;
  return j.dump(2) + "\n";
}

}  // namespace postpick
