#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "postpick/classifier.hpp"
#include "postpick/features.hpp"
#include "postpick/manifest.hpp"
#include "postpick/metrics.hpp"

namespace postpick {

/// One classified image.
struct Prediction {
  std::string path;
  Label predicted = Label::kNonParticle;
  std::size_t margin = 0;
  std::size_t votes_particle = 0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// JSON Lines {path, predicted, margin, votes_particle}.
std::string format_predictions(const std::vector<Prediction>& predictions);
std::vector<Prediction> parse_predictions(std::string_view jsonl);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

/// Labeled rows of a feature matrix; unlabeled rows are skipped.
Dataset dataset_from_rows(const std::vector<FeatureRow>& rows);

/// Classifies precomputed feature vectors. Throws ArgumentError when the
/// model was trained on another schema.
std::vector<Prediction> classify_rows(const Ensemble& ensemble, const std::vector<FeatureRow>& rows);

/// Extracts features for every manifest entry and classifies them, in
/// manifest order.
std::vector<Prediction> classify_manifest(const Ensemble& ensemble, const DatasetManifest& manifest,
                                          const std::filesystem::path& base_dir, std::size_t threads = 0);

/// Scores predictions against the labeled entries of `truth`, matched by
/// path. Predictions without a labeled counterpart are ignored; a labeled
/// entry without a prediction is a DataError. When `features` is given,
/// auc_per_feature holds the particle-positive AUC of every column over its
/// labeled rows.
EvaluationReport evaluate(const std::vector<Prediction>& predictions, const DatasetManifest& truth,
                          const std::vector<FeatureRow>* features = nullptr);

// File-level stages behind the command-line tool.

std::vector<std::filesystem::path> run_simulate(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                                                std::size_t threads = 0);
void run_features(const std::filesystem::path& manifest, const std::filesystem::path& out_csv,
                  std::size_t threads = 0);
Ensemble run_train(const std::filesystem::path& features_csv, std::size_t k, std::uint64_t seed,
                   const std::filesystem::path& out_model, std::size_t threads = 0);
void run_classify(const std::filesystem::path& model, const std::filesystem::path& manifest,
                  const std::filesystem::path& out, std::size_t threads = 0);
EvaluationReport run_eval(const std::filesystem::path& predictions, const std::filesystem::path& truth,
                          const std::filesystem::path& out,
                          const std::optional<std::filesystem::path>& features = std::nullopt);

/// Writes `text` to `path` via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace postpick
