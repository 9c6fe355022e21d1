#pragma once

// Human-readable justifications for a triple's score.

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ruledict/eval.hpp"
#include "ruledict/graph.hpp"
#include "ruledict/rules.hpp"

namespace ruledict {

struct Explanation {
  FiredRule fired;
  double probability = 0.0;
  std::string rendered;
};

struct ExplainResult {
  std::vector<Explanation> items;
  /// Abbreviated relation name -> full name.
  std::map<std::string, std::string> legend;
  std::string note;
  bool resolvable = true;
};

/// Shortens slash-separated relation names ("/a/b/c/d") to their last two
/// segments ("c/d"). Other names are returned unchanged.
class NameAbbreviator {
 public:
  std::string relation(const KnowledgeGraph& g, RelationId r) {
    const std::string base = g.relation_name(g.base_of(r));
    std::string shown = abbreviate(base);
    if (shown != base) legend_.emplace(shown, base);
    if (g.is_inverse(r)) shown += "^-1";
    return shown;
  }
  static std::string abbreviate(std::string_view name) {
    if (name.empty() || name.front() != '/') return std::string(name);
    std::vector<std::string_view> parts;
    std::size_t start = 1;
    while (start <= name.size()) {
      std::size_t end = name.find('/', start);
      if (end == std::string_view::npos) end = name.size();
      if (end > start) parts.push_back(name.substr(start, end - start));
      start = end + 1;
    }
    if (parts.size() <= 2) return std::string(name);
    return std::string(parts[parts.size() - 2]) + "/" + std::string(parts.back());
  }
  std::map<std::string, std::string> take_legend() { return std::move(legend_); }

 private:
  std::map<std::string, std::string> legend_;
};

namespace detail {

inline std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", p);
  return buf;
}

inline std::string format_real(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", p);
  return buf;
}

inline std::string render_eas(const KnowledgeGraph& g, NameAbbreviator& names, const Eas& e,
                              std::string_view var) {
  return names.relation(g, e.relation) + "(" + std::string(var) + ", " +
         g.entity_name(e.anchor) + ")";
}

inline std::string render_path(const KnowledgeGraph& g, NameAbbreviator& names,
                               const Path& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::string from = i == 0 ? "X" : "Z" + std::to_string(i);
    const std::string to = i + 1 == p.size() ? "Y" : "Z" + std::to_string(i + 1);
    if (i > 0) out += " & ";
    out += names.relation(g, p[i]) + "(" + from + ", " + to + ")";
  }
  return out;
}

inline std::string render_fired(const KnowledgeGraph& g, NameAbbreviator& names,
                                const FiredRule& f, EntityId s, EntityId t) {
  const std::string_view arrow = " ⟵ ";
  struct Visitor {
    const KnowledgeGraph& g;
    NameAbbreviator& names;
    const FiredRule& f;
    EntityId s, t;
    std::string_view arrow;

    std::string anchored(const Eas& head, const Eas& body, std::string prefix) const {
      const std::string var = f.inverse_side ? "Y" : "X";
      const EntityId at = f.inverse_side ? t : s;
      return prefix + ": " + render_eas(g, names, head, var) + std::string(arrow) +
             render_eas(g, names, body, var) + ", grounded at " + g.entity_name(at);
    }
    std::string operator()(const EarRule* r) const {
      return anchored(r->head, r->body,
                      "P=" + std::to_string(r->k) + "/" + std::to_string(r->m) + " (" +
                          format_prob(r->prob()) + ")");
    }
    std::string operator()(const EearRule* r) const {
      return anchored(r->head, r->body,
                      "P=" + format_real(r->prob()) + " (" + format_real(r->alpha) + " * " +
                          std::to_string(r->source.k) + "/" + std::to_string(r->source.m) +
                          " * " + format_real(r->avg_prob) + ")");
    }
    std::string operator()(const CarRule* r) const {
      return "P=" + std::to_string(r->k) + "/" + std::to_string(r->m) + " (" +
             format_prob(r->prob()) + "): " + names.relation(g, r->head) + "(X, Y)" +
             std::string(arrow) + render_path(g, names, r->body) + ", grounded at (" +
             g.entity_name(s) + ", " + g.entity_name(t) + ")";
    }
    std::string operator()(const BisEarRule* r) const {
      return "P=" + std::to_string(r->k) + "/(" + std::to_string(r->m1) + "*" +
             std::to_string(r->m2) + ") (" + format_real(r->prob()) +
             "): " + names.relation(g, r->relation) + "(X, Y)" + std::string(arrow) +
             render_eas(g, names, r->body_x, "X") + " & " +
             render_eas(g, names, r->body_y, "Y") + ", grounded at (" + g.entity_name(s) +
             ", " + g.entity_name(t) + ")";
    }
  };
  return std::visit(Visitor{g, names, f, s, t, arrow}, f.rule);
}

}  // namespace detail

/// The rules behind score_triple(r, s, t), strongest first, at most top_k.
/// Ties keep collection order, which is deterministic.
inline ExplainResult explain_triple(const Scorer& scorer, RelationId r, EntityId s, EntityId t,
                                    std::size_t top_k, Direction d = Direction::tail) {
  const KnowledgeGraph& g = scorer.graph();
  ExplainResult out;
  auto fired = scorer.fired_rules(r, s, t, d);
  std::stable_sort(fired.begin(), fired.end(),
                   [](const FiredRule& a, const FiredRule& b) { return a.prob > b.prob; });
  if (fired.size() > top_k) fired.resize(top_k);
  // Rendering uses the canonical orientation the rules were matched in.
  const Query q = scorer.canonical(r, s, t, d);
  NameAbbreviator names;
  for (const auto& f : fired) {
    out.items.push_back({f, f.prob, detail::render_fired(g, names, f, q.source, q.target)});
  }
  out.legend = names.take_legend();
  if (scorer.options().filtering_active && g.linked(s, t)) {
    out.note = "entity pair is linked in training; its score is zeroed by pair filtering";
  } else if (out.items.empty()) {
    out.note = "no rule applies to this triple";
  }
  return out;
}

/// Name-level entry point. Unknown names give an empty, unresolvable result.
inline ExplainResult explain_triple(const Scorer& scorer, std::string_view relation,
                                    std::string_view source, std::string_view target,
                                    std::size_t top_k, Direction d = Direction::tail) {
  const KnowledgeGraph& g = scorer.graph();
  const auto r = g.find_relation(relation);
  const auto s = g.find_entity(source);
  const auto t = g.find_entity(target);
  if (!r || !s || !t) {
    ExplainResult out;
    out.resolvable = false;
    std::string missing;
    auto note = [&](bool ok, std::string_view kind, std::string_view name) {
      if (ok) return;
      if (!missing.empty()) missing += ", ";
      missing += std::string(kind) + " '" + std::string(name) + "'";
    };
    note(r.has_value(), "relation", relation);
    note(s.has_value(), "entity", source);
    note(t.has_value(), "entity", target);
    out.note = "unresolvable: unknown " + missing;
    return out;
  }
  return explain_triple(scorer, *r, *s, *t, top_k, d);
}

inline std::string render_text(const ExplainResult& res) {
  std::string out;
  for (const auto& item : res.items) out += item.rendered + "\n";
  if (!res.legend.empty()) {
    out += "where\n";
    for (const auto& [abbr, full] : res.legend) out += "  " + abbr + " = " + full + "\n";
  }
  if (!res.note.empty()) out += res.note + "\n";
  return out;
}

inline nlohmann::json to_json(const ExplainResult& res) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : res.items) {
    items.push_back({{"type", std::string(to_string(item.fired.kind()))},
                     {"probability", item.probability},
                     {"rendered", item.rendered}});
  }
  nlohmann::json j = {{"resolvable", res.resolvable}, {"explanations", items}};
  j["legend"] = res.legend;
  if (!res.note.empty()) j["note"] = res.note;
  return j;
}

}  // namespace ruledict
