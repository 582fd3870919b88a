#include "postpick/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "postpick/error.hpp"

namespace postpick {

std::string_view to_string(Label label) {
  return label == Label::kParticle ? "particle" : "non_particle";
}

std::string_view to_string(ManifestLabel label) {
  switch (label) {
    case ManifestLabel::kParticle: return "particle";
    case ManifestLabel::kNonParticle: return "non_particle";
    case ManifestLabel::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::string_view to_string(Source source) {
  switch (source) {
    case Source::kHand: return "hand";
    case Source::kSimulator: return "simulator";
    case Source::kPrediction: return "prediction";
  }
  return "hand";
}

ManifestLabel parse_manifest_label(std::string_view s) {
  if (s == "particle") return ManifestLabel::kParticle;
  if (s == "non_particle") return ManifestLabel::kNonParticle;
  if (s == "unlabeled") return ManifestLabel::kUnlabeled;
  throw ArgumentError("unknown label '" + std::string(s) + "'");
}

Label parse_label(std::string_view s) {
  if (s == "particle") return Label::kParticle;
  if (s == "non_particle") return Label::kNonParticle;
  throw ArgumentError("unknown label '" + std::string(s) + "'");
}

Source parse_source(std::string_view s) {
  if (s == "hand") return Source::kHand;
  if (s == "simulator") return Source::kSimulator;
  if (s == "prediction") return Source::kPrediction;
  throw ArgumentError("unknown source '" + std::string(s) + "'");
}

std::optional<Label> as_label(ManifestLabel l) {
  switch (l) {
    case ManifestLabel::kParticle: return Label::kParticle;
    case ManifestLabel::kNonParticle: return Label::kNonParticle;
    case ManifestLabel::kUnlabeled: return std::nullopt;
  }
  return std::nullopt;
}

ManifestLabel as_manifest_label(Label l) {
  return l == Label::kParticle ? ManifestLabel::kParticle : ManifestLabel::kNonParticle;
}

void DatasetManifest::add(ManifestEntry entry) {
  if (!index_.emplace(entry.path, entries_.size()).second) {
    throw ArgumentError("duplicate manifest path '" + entry.path + "'");
  }
  entries_.push_back(std::move(entry));
}

std::optional<std::size_t> DatasetManifest::find(std::string_view path) const {
  const auto it = index_.find(std::string(path));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string DatasetManifest::resolve(const std::filesystem::path& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (base_dir / p).string();
}

DatasetManifest DatasetManifest::parse(std::string_view jsonl) {
  DatasetManifest m;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ManifestEntry e;
    try {
      const auto j = nlohmann::json::parse(line);
      e.path = j.at("path").get<std::string>();
      e.label = parse_manifest_label(j.at("label").get<std::string>());
      e.source = parse_source(j.at("source").get<std::string>());
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const ArgumentError& ex) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (m.find(e.path)) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": duplicate path '" + e.path + "'");
    }
    m.add(std::move(e));
  }
  return m;
}

DatasetManifest DatasetManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string DatasetManifest::serialize() const {
  std::string out;
  for (const auto& e : entries_) {
    nlohmann::ordered_json j;
    j["path"] = e.path;
    j["label"] = to_string(e.label);
    j["source"] = to_string(e.source);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void DatasetManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  out << serialize();
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace postpick
