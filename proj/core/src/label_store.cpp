#include "postpick/label_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "postpick/error.hpp"

namespace postpick {

namespace {

constexpr const char* kPredictionsName = "predictions.jsonl";

std::filesystem::path find_manifest(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw ArgumentError("not a directory: " + root.string());
  const auto preferred = root / "manifest.jsonl";
  if (std::filesystem::exists(preferred)) return preferred;
  std::vector<std::filesystem::path> found;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && e.path().extension() == ".jsonl" && name != LabelStore::kJournalName &&
        name != kPredictionsName) {
      found.push_back(e.path());
    }
  }
  if (found.size() != 1) {
    throw ArgumentError("expected manifest.jsonl or exactly one *.jsonl manifest in " + root.string());
  }
  return found.front();
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

bool matches(const SampleRecord& r, SampleState s) {
  switch (s) {
    case SampleState::kAll: return true;
    case SampleState::kUnlabeled: return r.label == ManifestLabel::kUnlabeled;
    case SampleState::kLabeled: return r.label != ManifestLabel::kUnlabeled;
    case SampleState::kPredicted: return r.prediction.has_value();
  }
  return false;
}

}  // namespace

SampleState parse_sample_state(std::string_view s) {
  if (s == "all") return SampleState::kAll;
  if (s == "unlabeled") return SampleState::kUnlabeled;
  if (s == "labeled") return SampleState::kLabeled;
  if (s == "predicted") return SampleState::kPredicted;
  throw ArgumentError("unknown state '" + std::string(s) + "'");
}

LabelStore::LabelStore(std::filesystem::path root) : root_(std::move(root)), manifest_path_(find_manifest(root_)) {
  const auto manifest = DatasetManifest::read(manifest_path_);
  records_.reserve(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest[i];
    records_.push_back({i, e.path, e.label, e.source, 0, std::nullopt});
    by_path_.emplace(e.path, i);
  }
  replay();
  const auto preds = root_ / kPredictionsName;
  if (std::filesystem::exists(preds)) {
    for (auto& p : read_predictions(preds)) {
      if (const auto it = by_path_.find(p.path); it != by_path_.end()) records_[it->second].prediction = std::move(p);
    }
  }
}

void LabelStore::replay() {
  std::ifstream in(journal_path(), std::ios::binary);
  if (!in) return;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[n]);
    } catch (const nlohmann::json::exception&) {
      // A torn final line is a write that was never acknowledged.
      if (n + 1 == lines.size()) break;
      throw FormatError("corrupt journal line " + std::to_string(n + 1));
    }
    try {
      const auto it = by_path_.find(j.at("path").get<std::string>());
      if (it == by_path_.end()) throw DataError("journal refers to unknown path " + j.at("path").get<std::string>());
      auto& r = records_[it->second];
      r.label = parse_manifest_label(j.at("label").get<std::string>());
      r.source = parse_source(j.at("source").get<std::string>());
      r.timestamp = j.at("timestamp").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("journal line " + std::to_string(n + 1) + ": " + e.what());
    }
  }
}

void LabelStore::append_journal(const SampleRecord& r) {
  nlohmann::ordered_json j;
  j["path"] = r.path;
  j["label"] = to_string(r.label);
  j["source"] = to_string(r.source);
  j["timestamp"] = r.timestamp;
  const std::string line = j.dump() + "\n";

  const auto path = journal_path();
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw FormatError("cannot open journal: " + std::string(std::strerror(errno)));
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      ::close(fd);
      throw FormatError("journal write failed: " + std::string(std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw FormatError("journal fsync failed");
}

std::string LabelStore::locator(std::size_t id) const {
  std::shared_lock lock(mutex_);
  if (id >= records_.size()) throw ArgumentError("unknown sample id " + std::to_string(id));
  return DatasetManifest::resolve(manifest_path_.parent_path(), records_[id].path);
}

std::size_t LabelStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::optional<SampleRecord> LabelStore::get(std::size_t id) const {
  std::shared_lock lock(mutex_);
  if (id >= records_.size()) return std::nullopt;
  return records_[id];
}

std::vector<SampleRecord> LabelStore::list(SampleState state, std::size_t offset, std::size_t limit) const {
  std::shared_lock lock(mutex_);
  std::vector<SampleRecord> out;
  std::size_t seen = 0;
  for (const auto& r : records_) {
    if (!matches(r, state)) continue;
    if (seen++ < offset) continue;
    if (out.size() == limit) break;
    out.push_back(r);
  }
  return out;
}

std::size_t LabelStore::count(SampleState state) const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& r : records_) n += matches(r, state) ? 1 : 0;
  return n;
}

SampleRecord LabelStore::set_label(std::size_t id, Label label) {
  std::unique_lock lock(mutex_);
  if (id >= records_.size()) throw ArgumentError("unknown sample id " + std::to_string(id));
  auto& r = records_[id];
  const ManifestLabel wanted = as_manifest_label(label);
  if (r.label == wanted && r.source == Source::kHand) return r;
  SampleRecord next = r;
  next.label = wanted;
  next.source = Source::kHand;
  next.timestamp = now_ms();
  append_journal(next);
  r = next;
  return r;
}

std::vector<std::pair<std::size_t, Label>> LabelStore::labeled() const {
  std::shared_lock lock(mutex_);
  std::vector<std::pair<std::size_t, Label>> out;
  for (const auto& r : records_) {
    if (const auto l = as_label(r.label)) out.emplace_back(r.id, *l);
  }
  return out;
}

void LabelStore::set_predictions(const std::vector<Prediction>& predictions) {
  std::unique_lock lock(mutex_);
  if (predictions.size() != records_.size()) throw ArgumentError("prediction count does not match the manifest");
  write_predictions(root_ / kPredictionsName, predictions);
  for (std::size_t i = 0; i < records_.size(); ++i) records_[i].prediction = predictions[i];
}

std::vector<SampleRecord> LabelStore::predicted() const {
  std::shared_lock lock(mutex_);
  std::vector<SampleRecord> out;
  for (const auto& r : records_) {
    if (r.prediction) out.push_back(r);
  }
  return out;
}

}  // namespace postpick
