#include "postpick/pipeline.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "postpick/error.hpp"
#include "postpick/simulator.hpp"

namespace postpick {

std::string format_predictions(const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    nlohmann::ordered_json j;
    j["path"] = p.path;
    j["predicted"] = to_string(p.predicted);
    j["margin"] = p.margin;
    j["votes_particle"] = p.votes_particle;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Prediction> parse_predictions(std::string_view jsonl) {
  std::vector<Prediction> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.path = j.at("path").get<std::string>();
      p.predicted = parse_label(j.at("predicted").get<std::string>());
      p.margin = j.at("margin").get<std::size_t>();
      p.votes_particle = j.at("votes_particle").get<std::size_t>();
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("predictions line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ArgumentError& e) {
      throw FormatError("predictions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
  write_text_file(path, format_predictions(predictions));
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_text_file(path));
}

Dataset dataset_from_rows(const std::vector<FeatureRow>& rows) {
  Dataset data(kFeatureCount);
  for (const auto& r : rows) {
    if (const auto label = as_label(r.label)) data.add(r.features, *label);
  }
  return data;
}

std::vector<Prediction> classify_rows(const Ensemble& ensemble, const std::vector<FeatureRow>& rows) {
  if (ensemble.schema() != default_schema()) {
    throw ArgumentError("model schema does not match the feature schema");
  }
  std::vector<Prediction> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const Vote v = ensemble.predict(r.features);
    out.push_back({r.path, v.label, v.margin, v.votes_particle});
  }
  return out;
}

std::vector<Prediction> classify_manifest(const Ensemble& ensemble, const DatasetManifest& manifest,
                                          const std::filesystem::path& base_dir, std::size_t threads) {
  if (ensemble.schema() != default_schema()) {
    throw ArgumentError("model schema does not match the feature schema");
  }
  return classify_rows(ensemble, extract_manifest(manifest, base_dir, {}, threads));
}

EvaluationReport evaluate(const std::vector<Prediction>& predictions, const DatasetManifest& truth,
                          const std::vector<FeatureRow>* features) {
  std::unordered_map<std::string, Label> predicted;
  for (const auto& p : predictions) predicted.emplace(p.path, p.predicted);

  ConfusionMatrix cm;
  for (const auto& e : truth.entries()) {
    const auto label = as_label(e.label);
    if (!label) continue;
    const auto it = predicted.find(e.path);
    if (it == predicted.end()) throw DataError("no prediction for labeled entry " + e.path);
    cm.add(*label, it->second);
  }
  if (cm.total() == 0) throw DataError("truth manifest has no labeled entries");

  std::map<std::string, double> auc;
  if (features) {
    std::vector<Label> labels;
    std::vector<std::vector<double>> columns(kFeatureCount);
    for (const auto& r : *features) {
      const auto idx = truth.find(r.path);
      const auto label = idx ? as_label(truth[*idx].label) : as_label(r.label);
      if (!label) continue;
      labels.push_back(*label);
      for (std::size_t f = 0; f < kFeatureCount; ++f) columns[f].push_back(r.features[f]);
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      auc[std::string(kFeatureNames[f])] = roc_auc(columns[f], labels);
    }
  }
  return make_report(cm, std::move(auc));
}

std::vector<std::filesystem::path> run_simulate(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                                                std::size_t threads) {
  return generate_dataset(load_config(config), out_dir, threads);
}

void run_features(const std::filesystem::path& manifest, const std::filesystem::path& out_csv, std::size_t threads) {
  const auto m = DatasetManifest::read(manifest);
  write_feature_csv(out_csv, extract_manifest(m, manifest.parent_path(), {}, threads));
}

Ensemble run_train(const std::filesystem::path& features_csv, std::size_t k, std::uint64_t seed,
                   const std::filesystem::path& out_model, std::size_t threads) {
  EnsembleOptions options;
  options.k = k;
  options.seed = seed;
  options.threads = threads;
  auto result = build_ensemble(dataset_from_rows(read_feature_csv(features_csv)), options);
  save_ensemble(out_model, result.ensemble);
  return std::move(result.ensemble);
}

void run_classify(const std::filesystem::path& model, const std::filesystem::path& manifest,
                  const std::filesystem::path& out, std::size_t threads) {
  const auto ensemble = load_ensemble(model);
  const auto m = DatasetManifest::read(manifest);
  write_predictions(out, classify_manifest(ensemble, m, manifest.parent_path(), threads));
}

EvaluationReport run_eval(const std::filesystem::path& predictions, const std::filesystem::path& truth,
                          const std::filesystem::path& out, const std::optional<std::filesystem::path>& features) {
  const auto preds = read_predictions(predictions);
  const auto m = DatasetManifest::read(truth);
  std::vector<FeatureRow> rows;
  if (features) rows = read_feature_csv(*features);
  auto report = evaluate(preds, m, features ? &rows : nullptr);
  write_text_file(out, report_to_json(report));
  return report;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot create " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace postpick
