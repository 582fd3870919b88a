#include <fstream>
#include <sstream>

#include <json.hpp>

#include "postpick/classifier.hpp"
#include "postpick/error.hpp"

namespace postpick {
namespace {

using json = nlohmann::ordered_json;

json ratio_json(const Ratio& r) { return r ? json(*r) : json(nullptr); }

Ratio ratio_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json node_json(const TreeNode& n) {
  json j;
  if (n.is_leaf()) {
    j["leaf"] = to_string(n.label);
    j["counts"] = {{"particle", n.count_particle}, {"non_particle", n.count_non_particle}};
  } else {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
  }
  return j;
}

// Rebuilds child links from a pre-order listing.
std::size_t relink(const json& list, std::size_t& cursor, std::size_t dims, std::vector<TreeNode>& out) {
  if (cursor >= list.size()) throw FormatError("model: truncated node list");
  const json& j = list.at(cursor++);
  const std::size_t index = out.size();
  out.emplace_back();
  if (j.contains("leaf")) {
    TreeNode& n = out.back();
    n.label = parse_label(j.at("leaf").get<std::string>());
    n.count_particle = j.at("counts").at("particle").get<std::size_t>();
    n.count_non_particle = j.at("counts").at("non_particle").get<std::size_t>();
    return index;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= dims) throw FormatError("model: feature index out of range");
  out[index].feature = feature;
  out[index].threshold = j.at("threshold").get<double>();
  const std::size_t left = relink(list, cursor, dims, out);
  const std::size_t right = relink(list, cursor, dims, out);
  out[index].left = left;
  out[index].right = right;
  return index;
}

}  // namespace

std::string ensemble_to_json(const Ensemble& ensemble) {
  json j;
  j["schema"] = ensemble.schema();
  j["k"] = ensemble.k();
  j["seed"] = ensemble.seed();
  const auto& v = ensemble.validation();
  j["validation"] = {{"sensitivity", ratio_json(v.sensitivity)},
                     {"specificity", ratio_json(v.specificity)},
                     {"accuracy", ratio_json(v.accuracy)},
                     {"tp", v.cm.tp},
                     {"fp", v.cm.fp},
                     {"tn", v.cm.tn},
                     {"fn", v.cm.fn},
                     {"member_accuracy", v.member_accuracy}};
  j["members"] = json::array();
  for (const auto& tree : ensemble.members()) {
    json nodes = json::array();
    for (const auto& n : tree.nodes()) nodes.push_back(node_json(n));
    j["members"].push_back({{"nodes", std::move(nodes)}});
  }
  return j.dump() + "\n";
}

Ensemble ensemble_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    auto schema = j.at("schema").get<std::vector<std::string>>();
    const auto k = j.at("k").get<std::size_t>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    ValidationReport v;
    const json& jv = j.at("validation");
    v.sensitivity = ratio_from(jv.at("sensitivity"));
    v.specificity = ratio_from(jv.at("specificity"));
    if (jv.contains("accuracy")) v.accuracy = ratio_from(jv.at("accuracy"));
    if (jv.contains("tp")) {
      v.cm = {jv.at("tp").get<std::size_t>(), jv.at("fp").get<std::size_t>(), jv.at("tn").get<std::size_t>(),
              jv.at("fn").get<std::size_t>()};
    }
    if (jv.contains("member_accuracy")) v.member_accuracy = jv.at("member_accuracy").get<std::vector<double>>();
    std::vector<DecisionTree> members;
    for (const json& m : j.at("members")) {
      const json& list = m.at("nodes");
      std::vector<TreeNode> nodes;
      std::size_t cursor = 0;
      relink(list, cursor, schema.size(), nodes);
      if (cursor != list.size()) throw FormatError("model: trailing nodes in member");
      members.emplace_back(schema.size(), std::move(nodes));
    }
    if (members.size() != k) throw FormatError("model: k does not match the number of members");
    return Ensemble(std::move(schema), std::move(members), seed, std::move(v));
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

void save_ensemble(const std::filesystem::path& path, const Ensemble& ensemble) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  out << ensemble_to_json(ensemble);
  if (!out) throw FormatError("failed writing " + path.string());
}

Ensemble load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ensemble_from_json(ss.str());
}

}  // namespace postpick
