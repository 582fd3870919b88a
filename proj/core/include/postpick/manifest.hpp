#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace postpick {

enum class Label { kNonParticle = 0, kParticle = 1 };

enum class ManifestLabel { kParticle, kNonParticle, kUnlabeled };
enum class Source { kHand, kSimulator, kPrediction };

std::string_view to_string(Label label);
std::string_view to_string(ManifestLabel label);
std::string_view to_string(Source source);

/// Throws ArgumentError for unknown names.
ManifestLabel parse_manifest_label(std::string_view s);
Source parse_source(std::string_view s);
Label parse_label(std::string_view s);

std::optional<Label> as_label(ManifestLabel l);
ManifestLabel as_manifest_label(Label l);

struct ManifestEntry {
  std::string path;
  ManifestLabel label = ManifestLabel::kUnlabeled;
  Source source = Source::kHand;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// JSON Lines dataset listing. Paths are stored as written; relative paths
/// resolve against the manifest's directory.
class DatasetManifest {
 public:
  DatasetManifest() = default;

  /// Throws ArgumentError on a duplicate path.
  void add(ManifestEntry entry);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const ManifestEntry& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> find(std::string_view path) const;

  /// Locator suitable for load_image(), resolved against `base_dir`.
  static std::string resolve(const std::filesystem::path& base_dir, const std::string& path);

  static DatasetManifest read(const std::filesystem::path& path);
  static DatasetManifest parse(std::string_view jsonl);
  void write(const std::filesystem::path& path) const;
  std::string serialize() const;

 private:
  std::vector<ManifestEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace postpick
