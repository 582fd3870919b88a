#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "postpick/manifest.hpp"
#include "postpick/pipeline.hpp"

namespace postpick {

/// Current state of one manifest entry.
struct SampleRecord {
  std::size_t id = 0;
  std::string path;
  ManifestLabel label = ManifestLabel::kUnlabeled;
  Source source = Source::kHand;
  /// Milliseconds since the Unix epoch of the last label change; 0 for
  /// labels that come straight from the manifest.
  std::int64_t timestamp = 0;
  std::optional<Prediction> prediction;
};

enum class SampleState { kAll, kUnlabeled, kLabeled, kPredicted };

SampleState parse_sample_state(std::string_view s);

/// Mutable label table over a dataset manifest. Every change is appended
/// to a journal and flushed to disk before the call returns; the journal is
/// replayed on open. One writer at a time, any number of readers.
class LabelStore {
 public:
  /// Opens `root`/manifest.jsonl, or the only other *.jsonl file in `root`.
  explicit LabelStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  const std::filesystem::path& manifest_path() const { return manifest_path_; }
  std::filesystem::path journal_path() const { return root_ / kJournalName; }
  /// Locator of sample `id` suitable for load_image().
  std::string locator(std::size_t id) const;

  std::size_t size() const;
  std::optional<SampleRecord> get(std::size_t id) const;
  /// Records matching `state`, in manifest order, after skipping `offset`.
  std::vector<SampleRecord> list(SampleState state, std::size_t offset, std::size_t limit) const;
  std::size_t count(SampleState state) const;

  /// Sets a hand label. Re-posting the label a record already carries is a
  /// no-op. Throws ArgumentError for an unknown id or for "unlabeled".
  SampleRecord set_label(std::size_t id, Label label);

  /// (id, label) of every labeled record.
  std::vector<std::pair<std::size_t, Label>> labeled() const;

  /// Replaces all predictions; `predictions` is indexed by id.
  void set_predictions(const std::vector<Prediction>& predictions);
  std::vector<SampleRecord> predicted() const;

  static constexpr const char* kJournalName = "labels.journal.jsonl";

 private:
  void replay();
  void append_journal(const SampleRecord& r);

  std::filesystem::path root_;
  std::filesystem::path manifest_path_;
  mutable std::shared_mutex mutex_;
  std::vector<SampleRecord> records_;
  std::unordered_map<std::string, std::size_t> by_path_;
};

}  // namespace postpick
