#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>

#include "postpick/classifier.hpp"
#include "postpick/error.hpp"
#include "postpick/parallel.hpp"

namespace postpick {

std::vector<CandidateSpec> default_candidate_pool() {
  return {{5, false}, {10, false}, {20, false}, {10, true}, {10, true}};
}

Ensemble::Ensemble(std::vector<std::string> schema, std::vector<DecisionTree> members, std::uint64_t seed,
                   ValidationReport validation)
    : schema_(std::move(schema)), members_(std::move(members)), seed_(seed), validation_(std::move(validation)) {
  if (members_.empty() || members_.size() % 2 == 0) {
    throw ArgumentError("ensemble size must be odd, got " + std::to_string(members_.size()));
  }
  for (const auto& m : members_) {
    if (m.dims() != schema_.size()) throw ArgumentError("ensemble member does not match the schema");
  }
}

Vote Ensemble::predict(std::span<const double> x) const {
  if (x.size() != schema_.size()) {
    throw ArgumentError("predict: feature vector has " + std::to_string(x.size()) + " values, model expects " +
                        std::to_string(schema_.size()));
  }
  Vote v;
  for (const auto& m : members_) v.votes_particle += m.predict(x) == Label::kParticle ? 1 : 0;
  const std::size_t against = members_.size() - v.votes_particle;
  v.label = v.votes_particle > against ? Label::kParticle : Label::kNonParticle;
  v.margin = v.votes_particle > against ? v.votes_particle - against : against - v.votes_particle;
  return v;
}

namespace {

double error_rate(const DecisionTree& tree, const Dataset& data, std::span<const std::size_t> rows) {
  std::size_t wrong = 0;
  for (auto r : rows) wrong += tree.predict(data.row(r)) != data.label(r) ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(rows.size());
}

}  // namespace

EnsembleResult build_ensemble(const Dataset& data, const EnsembleOptions& options, std::vector<std::string> schema) {
  if (options.k == 0 || options.k % 2 == 0) throw ArgumentError("build_ensemble: k must be odd");
  if (options.pool.empty()) throw ArgumentError("build_ensemble: empty candidate pool");
  if (options.test_denominator < 2) throw ArgumentError("build_ensemble: test_denominator must be >= 2");
  if (!(options.validation_fraction > 0.0 && options.validation_fraction < 1.0)) {
    throw ArgumentError("build_ensemble: validation_fraction must be in (0, 1)");
  }
  if (data.size() < options.min_samples) {
    throw ArgumentError("build_ensemble: need at least " + std::to_string(options.min_samples) +
                        " labelled samples, got " + std::to_string(data.size()));
  }
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[static_cast<std::size_t>(data.label(i))].push_back(i);
  if (by_class[0].empty() || by_class[1].empty()) {
    throw ArgumentError("build_ensemble: both particle and non_particle samples are required");
  }
  if (schema.empty()) {
    if (data.dims() == kFeatureCount) {
      schema = default_schema();
    } else {
      for (std::size_t f = 0; f < data.dims(); ++f) schema.push_back("f" + std::to_string(f));
    }
  }
  if (schema.size() != data.dims()) throw ArgumentError("build_ensemble: schema does not match the data");

  // All randomness is drawn up front, in a fixed order, so the rounds can be
  // trained in any order.
  std::mt19937_64 rng(options.seed);
  SplitReport splits;
  splits.seed = options.seed;
  std::vector<std::size_t> remaining;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto share = static_cast<std::size_t>(
        std::lround(options.validation_fraction * static_cast<double>(members.size())));
    // Stratified: each class contributes at least one validation sample and
    // keeps at least one for training when it can.
    const std::size_t hold = members.size() == 1 ? 1 : std::clamp<std::size_t>(share, 1, members.size() - 1);
    splits.validation.insert(splits.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(hold));
    remaining.insert(remaining.end(), members.begin() + static_cast<std::ptrdiff_t>(hold), members.end());
  }
  std::sort(splits.validation.begin(), splits.validation.end());
  std::sort(remaining.begin(), remaining.end());

  const std::size_t n_bootstrap = static_cast<std::size_t>(
      std::count_if(options.pool.begin(), options.pool.end(), [](const CandidateSpec& c) { return c.bootstrap; }));
  splits.rounds.resize(options.k);
  for (auto& round : splits.rounds) {
    std::vector<std::size_t> order = remaining;
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::lround(static_cast<double>(order.size()) / static_cast<double>(options.test_denominator)));
    round.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    round.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(round.test.begin(), round.test.end());
    std::sort(round.train.begin(), round.train.end());
    std::uniform_int_distribution<std::size_t> pick(0, round.train.size() - 1);
    round.bootstrap.resize(n_bootstrap);
    for (auto& sample : round.bootstrap) {
      sample.resize(round.train.size());
      for (auto& r : sample) r = round.train[pick(rng)];
    }
  }

  std::vector<DecisionTree> members(options.k);
  parallel_for(
      options.k,
      [&](std::size_t r) {
        RoundReport& round = splits.rounds[r];
        round.candidate_errors.assign(options.pool.size(), 0.0);
        std::size_t next_bootstrap = 0;
        double best_error = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < options.pool.size(); ++c) {
          const CandidateSpec& spec = options.pool[c];
          const auto& rows = spec.bootstrap ? round.bootstrap[next_bootstrap++] : round.train;
          DecisionTree tree = DecisionTree::train(data, rows, spec.min_split);
          const double err = round.test.empty() ? 0.0 : error_rate(tree, data, round.test);
          round.candidate_errors[c] = err;
          if (err < best_error) {
            best_error = err;
            round.selected = c;
            members[r] = std::move(tree);
          }
        }
      },
      options.threads);

  ValidationReport validation;
  validation.member_accuracy.assign(options.k, 0.0);
  std::vector<std::size_t> member_correct(options.k, 0);
  Ensemble provisional(schema, members, options.seed, {});
  for (auto r : splits.validation) {
    const auto x = data.row(r);
    validation.cm.add(data.label(r), provisional.predict(x).label);
    for (std::size_t m = 0; m < options.k; ++m) member_correct[m] += members[m].predict(x) == data.label(r) ? 1 : 0;
  }
  for (std::size_t m = 0; m < options.k; ++m) {
    validation.member_accuracy[m] =
        static_cast<double>(member_correct[m]) / static_cast<double>(splits.validation.size());
  }
  const DerivedMetrics dm = derived_metrics(validation.cm);
  validation.sensitivity = dm.sensitivity;
  validation.specificity = dm.specificity;
  validation.accuracy = dm.accuracy;

  return {Ensemble(std::move(schema), std::move(members), options.seed, std::move(validation)), std::move(splits)};
}

}  // namespace postpick
