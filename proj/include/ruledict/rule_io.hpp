#pragma once

// Rule store persistence: one JSON file per (relation, rule type) plus a
// manifest. Names are stored as surface strings and resolved on load;
// probabilities are recomputed from the stored counts.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ruledict/graph.hpp"
#include "ruledict/rules.hpp"
#include "ruledict/stats.hpp"

namespace ruledict {

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kStoreFormat = "ruledict-rules";
inline constexpr int kStoreVersion = 1;

/// File-name key of a relation: '/' becomes "__", the inverse suffix
/// becomes "_inv", anything else outside [A-Za-z0-9._-] becomes '_'.
inline std::string relation_file_key(std::string_view name) {
  std::string out;
  constexpr std::string_view inv = "^-1";
  bool inverse = name.size() > inv.size() && name.ends_with(inv);
  if (inverse) name.remove_suffix(inv.size());
  for (char c : name) {
    if (c == '/') {
      out += "__";
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
               c == '-') {
      out += c;
    } else {
      out += '_';
    }
  }
  if (inverse) out += "_inv";
  return out;
}

namespace detail {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kRuleSuffixes[] = {"_EAR.json", "_CAR.json", "_bisEAR.json",
                                                     "_EEAR.json"};

inline json eas_json(const KnowledgeGraph& g, const Eas& e) {
  return {{"relation", g.relation_name(e.relation)}, {"anchor", g.entity_name(e.anchor)}};
}

inline json reas_json(const KnowledgeGraph& g, const Reas& r) {
  return {{"first", g.relation_name(r.relation.first)},
          {"second", g.relation_name(r.relation.second)},
          {"anchor", g.entity_name(r.anchor)}};
}

inline void write_rule_file(const std::filesystem::path& path, std::string_view type,
                            const std::vector<json>& rules) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "{\"type\":\"" << type << "\",\"rules\":[\n";
  for (std::size_t i = 0; i < rules.size(); ++i) {
    out << rules[i].dump() << (i + 1 < rules.size() ? ",\n" : "\n");
  }
  out << "]}\n";
  if (!out) throw DataError("write failed: " + path.string());
}

/// Resolves names against the graph, reporting failures against `file`.
class Resolver {
 public:
  Resolver(const KnowledgeGraph& g, std::string file) : g_(g), file_(std::move(file)) {}

  [[noreturn]] void fail(const std::string& what) const { throw DataError(file_ + ": " + what); }

  RelationId relation(const nlohmann::json& j) const {
    const auto name = j.get<std::string>();
    auto r = g_.find_relation(name);
    if (!r) fail("unknown relation '" + name + "'");
    return *r;
  }
  EntityId entity(const nlohmann::json& j) const {
    const auto name = j.get<std::string>();
    auto e = g_.find_entity(name);
    if (!e) fail("unknown entity '" + name + "'");
    return *e;
  }
  Eas eas(const nlohmann::json& j) const {
    return {relation(j.at("relation")), entity(j.at("anchor"))};
  }
  Reas reas(const nlohmann::json& j) const {
    return {{relation(j.at("first")), relation(j.at("second"))}, entity(j.at("anchor"))};
  }
  Path path(const nlohmann::json& j) const {
    Path p;
    for (const auto& r : j) p.push_back(relation(r));
    if (p.empty()) fail("empty path");
    return p;
  }
  Polarity polarity(const nlohmann::json& j) const {
    try {
      return polarity_from_string(j.get<std::string>());
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  Direction direction(const nlohmann::json& j) const {
    const auto s = j.get<std::string>();
    if (s == "head") return Direction::head;
    if (s == "tail") return Direction::tail;
    fail("invalid direction '" + s + "'");
  }

 private:
  const KnowledgeGraph& g_;
  std::string file_;
};

}  // namespace detail

/// Writes every rule file and the manifest. Rule files from an earlier
/// save in the same directory are removed first. `dataset` and `config`
/// are recorded verbatim in the manifest.
inline void save_store(const RuleStore& store, const KnowledgeGraph& g,
                       const std::filesystem::path& dir,
                       const nlohmann::ordered_json& dataset = nlohmann::ordered_json::object(),
                       const nlohmann::ordered_json& config = nlohmann::ordered_json::object()) {
  using detail::json;
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    for (auto suffix : detail::kRuleSuffixes) {
      if (name.ends_with(suffix)) fs::remove(entry.path());
    }
  }

  // file name -> (type, rules), in name order so the manifest is stable.
  std::map<std::string, std::pair<std::string_view, std::vector<json>>> files;
  auto add = [&](RelationId r, std::string_view type, json rule) {
    auto& slot = files[relation_file_key(g.relation_name(r)) + "_" + std::string(type) + ".json"];
    slot.first = type;
    slot.second.push_back(std::move(rule));
  };

  for (const auto& [head, rules] : store.ear_map()) {
    for (const auto& r : rules) {
      add(head.relation, "EAR",
          {{"head", detail::eas_json(g, r.head)},
           {"body", detail::eas_json(g, r.body)},
           {"k", r.k},
           {"m", r.m},
           {"prob", r.prob()},
           {"polarity", std::string(to_string(r.polarity))}});
    }
  }
  for (const auto& [head, rules] : store.car_map()) {
    for (const auto& r : rules) {
      json body = json::array();
      for (RelationId rel : r.body) body.push_back(g.relation_name(rel));
      add(head, "CAR",
          {{"head", g.relation_name(r.head)},
           {"body", body},
           {"k", r.k},
           {"m", r.m},
           {"prob", r.prob()},
           {"polarity", std::string(to_string(r.polarity))}});
    }
  }
  for (Direction d : {Direction::head, Direction::tail}) {
    for (const auto& [rel, rules] : store.bisear_map(d)) {
      for (const auto& r : rules) {
        add(rel, "bisEAR",
            {{"relation", g.relation_name(r.relation)},
             {"direction", std::string(to_string(r.direction))},
             {"body_x", detail::eas_json(g, r.body_x)},
             {"body_y", detail::eas_json(g, r.body_y)},
             {"k", r.k},
             {"m1", r.m1},
             {"m2", r.m2},
             {"prob", r.prob()},
             {"polarity", std::string(to_string(r.polarity))}});
      }
    }
  }
  for (const auto& [head, rules] : store.eear_map()) {
    for (const auto& r : rules) {
      add(head.relation, "EEAR",
          {{"head", detail::eas_json(g, r.head)},
           {"body", detail::eas_json(g, r.body)},
           {"prob", r.prob()},
           {"alpha", r.alpha},
           {"avg_prob", r.avg_prob},
           {"rear",
            {{"head", detail::reas_json(g, r.source.head)},
             {"body", detail::reas_json(g, r.source.body)},
             {"k", r.source.k},
             {"m", r.source.m}}}});
    }
  }

  json file_list = json::array();
  for (const auto& [name, content] : files) {
    detail::write_rule_file(dir / name, content.first, content.second);
    file_list.push_back(name);
  }
  json manifest = {{"format", kStoreFormat},
                   {"version", kStoreVersion},
                   {"dataset", dataset},
                   {"config", config},
                   {"counts",
                    {{"EAR", store.ear_count()},
                     {"CAR", store.car_count()},
                     {"bisEAR", store.bisear_count()},
                     {"EEAR", store.eear_count()}}},
                   {"files", file_list}};
  std::ofstream out(dir / kManifestFile, std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / kManifestFile).string());
  out << manifest.dump(2) << "\n";
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline nlohmann::json read_manifest(const std::filesystem::path& dir) {
  auto manifest = read_json_file(dir / kManifestFile);
  if (!manifest.is_object() || manifest.value("format", "") != kStoreFormat) {
    throw DataError((dir / kManifestFile).string() + ": not a rule store manifest");
  }
  return manifest;
}

/// Loads every file listed in the manifest, resolving names against `g`.
inline RuleStore load_store(const KnowledgeGraph& g, const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir);
  RuleStore store;
  for (const auto& name_json : manifest.at("files")) {
    const auto path = dir / name_json.get<std::string>();
    const auto doc = read_json_file(path);
    const detail::Resolver res(g, path.string());
    try {
      const auto type = doc.at("type").get<std::string>();
      for (const auto& j : doc.at("rules")) {
        if (type == "EAR") {
          store.insert(EarRule{res.eas(j.at("head")), res.eas(j.at("body")),
                               j.at("k").get<std::uint64_t>(), j.at("m").get<std::uint64_t>(),
                               res.polarity(j.at("polarity"))});
        } else if (type == "CAR") {
          store.insert(CarRule{res.relation(j.at("head")), res.path(j.at("body")),
                               j.at("k").get<std::uint64_t>(), j.at("m").get<std::uint64_t>(),
                               res.polarity(j.at("polarity"))});
        } else if (type == "bisEAR") {
          BisEarRule r;
          r.relation = res.relation(j.at("relation"));
          r.direction = res.direction(j.at("direction"));
          r.body_x = res.eas(j.at("body_x"));
          r.body_y = res.eas(j.at("body_y"));
          r.k = j.at("k").get<std::uint64_t>();
          r.m1 = j.at("m1").get<std::uint64_t>();
          r.m2 = j.at("m2").get<std::uint64_t>();
          r.polarity = res.polarity(j.at("polarity"));
          store.insert(r);
        } else if (type == "EEAR") {
          EearRule r;
          r.head = res.eas(j.at("head"));
          r.body = res.eas(j.at("body"));
          r.alpha = j.at("alpha").get<double>();
          r.avg_prob = j.at("avg_prob").get<double>();
          const auto& rear = j.at("rear");
          r.source = {res.reas(rear.at("head")), res.reas(rear.at("body")),
                      rear.at("k").get<std::uint64_t>(), rear.at("m").get<std::uint64_t>()};
          store.insert(r);
        } else {
          res.fail("unknown rule type '" + type + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      res.fail(e.what());
    }
  }
  return store;
}

}  // namespace ruledict
