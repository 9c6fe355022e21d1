#pragma once

// Inverse-completed knowledge graph with the grounding, pair and adjacency
// indexes the rule miners and the scorer read from.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ruledict {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using EasId = std::uint32_t;

/// Raised for unreadable or malformed input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RawTriple {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const RawTriple&) const = default;
};

enum class Split { train, valid, test };

inline std::string_view split_file_name(Split which) {
  switch (which) {
    case Split::train:
      return "train.txt";
    case Split::valid:
      return "valid.txt";
    case Split::test:
      return "test.txt";
  }
  return "";
}

/// Parses `head<TAB>relation<TAB>tail` lines. Blank lines are skipped; any
/// other line without exactly three non-empty fields is an error.
inline std::vector<RawTriple> parse_triples(std::istream& in,
                                            std::string_view source_name) {
  std::vector<RawTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto first = line.find('\t');
    const auto second =
        first == std::string::npos ? first : line.find('\t', first + 1);
    if (second == std::string::npos ||
        line.find('\t', second + 1) != std::string::npos || first == 0 ||
        second == first + 1 || second + 1 == line.size()) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no
          << ": expected head<TAB>relation<TAB>tail";
      throw DataError(msg.str());
    }
    out.push_back({line.substr(0, first), line.substr(first + 1, second - first - 1),
                   line.substr(second + 1)});
  }
  if (in.bad()) throw DataError(std::string(source_name) + ": read error");
  return out;
}

inline std::vector<RawTriple> load_triples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_triples(in, path.string());
}

inline std::vector<RawTriple> load_split(const std::filesystem::path& dataset_dir,
                                         Split which) {
  return load_triples(dataset_dir / split_file_name(which));
}

/// One-hop ending anchored structure r(X, anchor).
struct Eas {
  RelationId relation = 0;
  EntityId anchor = 0;

  auto operator<=>(const Eas&) const = default;
};

struct EntityPair {
  EntityId source = 0;
  EntityId target = 0;

  auto operator<=>(const EntityPair&) const = default;
};

inline constexpr std::size_t kMaxPathLength = 3;

/// Relation sequence r1 ∧ ... ∧ rl with 1 <= l <= 3. Ordering is
/// lexicographic on the relation ids.
class Path {
 public:
  Path() = default;
  Path(std::initializer_list<RelationId> rels) {
    for (RelationId r : rels) push_back(r);
  }

  void push_back(RelationId r) {
    if (size_ == kMaxPathLength) throw std::length_error("path longer than 3");
    rels_[size_++] = r;
  }
  void pop_back() { rels_[--size_] = 0; }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  RelationId operator[](std::size_t i) const { return rels_[i]; }
  RelationId front() const { return rels_[0]; }
  RelationId back() const { return rels_[size_ - 1]; }
  const RelationId* begin() const { return rels_.data(); }
  const RelationId* end() const { return rels_.data() + size_; }

  auto operator<=>(const Path&) const = default;
  bool operator==(const Path&) const = default;

 private:
  std::array<RelationId, kMaxPathLength> rels_{};
  std::uint8_t size_ = 0;
};

namespace detail {

template <class T>
bool sorted_intersects(std::span<const T> a, std::span<const T> b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      return true;
    }
  }
  return false;
}

template <class T>
std::size_t sorted_intersection_size(std::span<const T> a, std::span<const T> b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::size_t count = 0;
  // Galloping pays off once the sets are badly unbalanced.
  if (a.size() * 16 < b.size()) {
    auto lo = b.begin();
    for (const T& x : a) {
      lo = std::lower_bound(lo, b.end(), x);
      if (lo == b.end()) break;
      if (*lo == x) ++count;
    }
    return count;
  }
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

template <class T>
bool sorted_contains(std::span<const T> a, const T& x) {
  return std::binary_search(a.begin(), a.end(), x);
}

}  // namespace detail

class KnowledgeGraph {
 public:
  /// Builds the inverse-completed graph. Vocabularies are assigned in order
  /// of first appearance; duplicate triples are dropped.
  static KnowledgeGraph build(std::span<const RawTriple> train);

  std::size_t num_entities() const { return entity_names_.size(); }
  std::size_t num_base_relations() const { return relation_names_.size(); }
  std::size_t num_relations() const { return 2 * relation_names_.size(); }
  std::size_t num_triples() const { return adj_target_.size(); }

  RelationId inverse(RelationId r) const {
    const auto R = static_cast<RelationId>(num_base_relations());
    return (r + R) % (2 * R);
  }
  bool is_inverse(RelationId r) const { return r >= num_base_relations(); }
  RelationId base_of(RelationId r) const { return is_inverse(r) ? inverse(r) : r; }

  std::optional<EntityId> find_entity(std::string_view name) const {
    auto it = entity_ids_.find(std::string(name));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
  }
  /// Accepts base names and inverse names of the form `name^-1`.
  std::optional<RelationId> find_relation(std::string_view name) const {
    if (name.size() > kInverseSuffix.size() && name.ends_with(kInverseSuffix)) {
      auto it = relation_ids_.find(
          std::string(name.substr(0, name.size() - kInverseSuffix.size())));
      if (it != relation_ids_.end()) return inverse(it->second);
    }
    auto it = relation_ids_.find(std::string(name));
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& entity_name(EntityId e) const { return entity_names_.at(e); }
  std::string relation_name(RelationId r) const {
    check_relation(r);
    if (is_inverse(r)) return relation_names_[base_of(r)] + std::string(kInverseSuffix);
    return relation_names_[r];
  }

  /// pair_index[r]: all (s, t) with r(s, t), sorted.
  std::span<const EntityPair> pairs(RelationId r) const {
    check_relation(r);
    return pairs_[r];
  }
  bool has_triple(RelationId r, EntityId s, EntityId t) const {
    return detail::sorted_contains(successors(s, r), t);
  }
  /// Distinct sources of relation r (the entities r grounds on), sorted.
  std::span<const EntityId> sources(RelationId r) const {
    check_relation(r);
    return sources_[r];
  }
  std::span<const EntityId> targets(RelationId r) const { return sources(inverse(r)); }

  /// Targets t with r(s, t), sorted.
  std::span<const EntityId> successors(EntityId s, RelationId r) const {
    check_entity(s);
    check_relation(r);
    const auto lo = adj_offset_[s];
    const auto hi = adj_offset_[s + 1];
    auto first = std::lower_bound(adj_rel_.begin() + lo, adj_rel_.begin() + hi, r);
    auto last = std::upper_bound(first, adj_rel_.begin() + hi, r);
    return {adj_target_.data() + (first - adj_rel_.begin()),
            static_cast<std::size_t>(last - first)};
  }

  /// Out-edges of s, sorted by (relation, target); the two spans are parallel.
  std::span<const RelationId> out_relations(EntityId s) const {
    check_entity(s);
    return {adj_rel_.data() + adj_offset_[s], adj_offset_[s + 1] - adj_offset_[s]};
  }
  std::span<const EntityId> out_targets(EntityId s) const {
    check_entity(s);
    return {adj_target_.data() + adj_offset_[s], adj_offset_[s + 1] - adj_offset_[s]};
  }
  /// EASs grounding on s, parallel to out_relations / out_targets. Each out
  /// edge r(s, t) corresponds to the EAS r(X, t); the list has no duplicates.
  std::span<const EasId> neighbourhood(EntityId s) const {
    check_entity(s);
    return {adj_eas_.data() + adj_offset_[s], adj_offset_[s + 1] - adj_offset_[s]};
  }
  /// Entities t linked to s by any relation (either direction), sorted.
  std::span<const EntityId> linked_entities(EntityId s) const {
    check_entity(s);
    return {linked_.data() + linked_offset_[s], linked_offset_[s + 1] - linked_offset_[s]};
  }
  bool linked(EntityId s, EntityId t) const {
    return detail::sorted_contains(linked_entities(s), t);
  }

  std::size_t num_eas() const { return eas_.size(); }
  const Eas& eas(EasId id) const { return eas_.at(id); }
  std::span<const Eas> all_eas() const { return eas_; }
  std::optional<EasId> find_eas(const Eas& a) const {
    auto it = std::lower_bound(eas_.begin(), eas_.end(), a);
    if (it == eas_.end() || *it != a) return std::nullopt;
    return static_cast<EasId>(it - eas_.begin());
  }
  /// G_a, sorted and duplicate free.
  std::span<const EntityId> grounding(EasId id) const {
    if (id >= eas_.size()) throw std::out_of_range("EAS id out of range");
    return successors(eas_[id].anchor, inverse(eas_[id].relation));
  }
  /// G_a for an arbitrary EAS; empty when the EAS does not exist in the graph.
  std::span<const EntityId> grounding(const Eas& a) const {
    check_relation(a.relation);
    check_entity(a.anchor);
    return successors(a.anchor, inverse(a.relation));
  }

  static constexpr std::string_view kInverseSuffix = "^-1";

 private:
  void check_entity(EntityId e) const {
    if (e >= num_entities()) throw std::out_of_range("entity id out of range");
  }
  void check_relation(RelationId r) const {
    if (r >= num_relations()) throw std::out_of_range("relation id out of range");
  }

  std::vector<std::string> entity_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, RelationId> relation_ids_;

  std::vector<std::vector<EntityPair>> pairs_;
  std::vector<std::vector<EntityId>> sources_;

  std::vector<std::size_t> adj_offset_;
  std::vector<RelationId> adj_rel_;
  std::vector<EntityId> adj_target_;
  std::vector<EasId> adj_eas_;

  std::vector<std::size_t> linked_offset_;
  std::vector<EntityId> linked_;

  std::vector<Eas> eas_;
};

inline KnowledgeGraph KnowledgeGraph::build(std::span<const RawTriple> train) {
  KnowledgeGraph g;
  auto intern = [](std::unordered_map<std::string, std::uint32_t>& ids,
                   std::vector<std::string>& names, const std::string& s) {
    auto [it, inserted] = ids.emplace(s, static_cast<std::uint32_t>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  };

  struct Edge {
    EntityId s;
    RelationId r;
    EntityId t;
    auto operator<=>(const Edge&) const = default;
  };
  std::vector<Edge> edges;
  edges.reserve(2 * train.size());
  for (const auto& raw : train) {
    const EntityId s = intern(g.entity_ids_, g.entity_names_, raw.head);
    const RelationId r = intern(g.relation_ids_, g.relation_names_, raw.relation);
    const EntityId t = intern(g.entity_ids_, g.entity_names_, raw.tail);
    edges.push_back({s, r, t});
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const auto R = static_cast<RelationId>(g.relation_names_.size());
  const std::size_t base_count = edges.size();
  for (std::size_t i = 0; i < base_count; ++i) {
    edges.push_back({edges[i].t, edges[i].r + R, edges[i].s});
  }
  std::sort(edges.begin(), edges.end());

  const std::size_t N = g.entity_names_.size();
  g.adj_offset_.assign(N + 1, 0);
  g.adj_rel_.reserve(edges.size());
  g.adj_target_.reserve(edges.size());
  for (const auto& e : edges) {
    ++g.adj_offset_[e.s + 1];
    g.adj_rel_.push_back(e.r);
    g.adj_target_.push_back(e.t);
  }
  for (std::size_t i = 0; i < N; ++i) g.adj_offset_[i + 1] += g.adj_offset_[i];

  g.pairs_.assign(2 * R, {});
  g.sources_.assign(2 * R, {});
  for (const auto& e : edges) g.pairs_[e.r].push_back({e.s, e.t});
  for (RelationId r = 0; r < 2 * R; ++r) {
    auto& p = g.pairs_[r];
    std::sort(p.begin(), p.end());
    for (const auto& pr : p) {
      if (g.sources_[r].empty() || g.sources_[r].back() != pr.source) {
        g.sources_[r].push_back(pr.source);
      }
    }
  }

  // Every edge r(s, t) makes the EAS r(X, t) exist.
  g.eas_.reserve(edges.size());
  for (const auto& e : edges) g.eas_.push_back({e.r, e.t});
  std::sort(g.eas_.begin(), g.eas_.end());
  g.eas_.erase(std::unique(g.eas_.begin(), g.eas_.end()), g.eas_.end());
  g.adj_eas_.reserve(edges.size());
  for (const auto& e : edges) g.adj_eas_.push_back(*g.find_eas({e.r, e.t}));

  g.linked_offset_.assign(N + 1, 0);
  for (EntityId s = 0; s < N; ++s) {
    const std::size_t start = g.linked_.size();
    for (std::size_t i = g.adj_offset_[s]; i < g.adj_offset_[s + 1]; ++i) {
      g.linked_.push_back(g.adj_target_[i]);
    }
    std::sort(g.linked_.begin() + static_cast<std::ptrdiff_t>(start), g.linked_.end());
    g.linked_.erase(std::unique(g.linked_.begin() + static_cast<std::ptrdiff_t>(start),
                                g.linked_.end()),
                    g.linked_.end());
    g.linked_offset_[s + 1] = g.linked_.size();
  }
  return g;
}

/// C_a: every other EAS whose grounding intersects G_a, sorted by id.
inline std::vector<EasId> connection_set(const KnowledgeGraph& g, EasId a) {
  std::vector<EasId> out;
  for (EntityId s : g.grounding(a)) {
    for (EasId b : g.neighbourhood(s)) {
      if (b != a) out.push_back(b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Relation sequences of length <= max_len where every consecutive pair
/// (ri, ri+1) shares at least one intermediate entity. Lexicographic order.
inline std::vector<Path> enumerate_candidate_paths(const KnowledgeGraph& g,
                                                   std::size_t max_len) {
  if (max_len < 1 || max_len > kMaxPathLength) {
    throw std::invalid_argument("max path length must be in [1, 3]");
  }
  const std::size_t RR = g.num_relations();
  std::vector<char> chains(RR * RR, 0);
  for (RelationId a = 0; a < RR; ++a) {
    for (RelationId b = 0; b < RR; ++b) {
      chains[a * RR + b] = detail::sorted_intersects(g.targets(a), g.sources(b));
    }
  }
  std::vector<Path> out;
  Path current;
  auto extend = [&](auto&& self) -> void {
    for (RelationId r = 0; r < RR; ++r) {
      if (g.pairs(r).empty()) continue;
      if (!current.empty() && !chains[current.back() * RR + r]) continue;
      current.push_back(r);
      out.push_back(current);
      if (current.size() < max_len) self(self);
      current.pop_back();
    }
  };
  extend(extend);
  return out;
}

/// Entities reachable from s by following p, sorted. `stamp` must have one
/// slot per entity; it is used as a visited marker and left dirty.
inline std::vector<EntityId> path_targets(const KnowledgeGraph& g, EntityId s,
                                          const Path& p,
                                          std::vector<std::uint32_t>& stamp,
                                          std::uint32_t& epoch) {
  auto first = g.successors(s, p[0]);
  std::vector<EntityId> frontier(first.begin(), first.end());
  std::vector<EntityId> next;
  for (std::size_t i = 1; i < p.size() && !frontier.empty(); ++i) {
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      epoch = 1;
    }
    next.clear();
    for (EntityId x : frontier) {
      for (EntityId y : g.successors(x, p[i])) {
        if (stamp[y] != epoch) {
          stamp[y] = epoch;
          next.push_back(y);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier.swap(next);
  }
  return frontier;
}

inline std::vector<EntityId> path_targets(const KnowledgeGraph& g, EntityId s,
                                          const Path& p) {
  std::vector<std::uint32_t> stamp(g.num_entities(), 0);
  std::uint32_t epoch = 0;
  return path_targets(g, s, p, stamp, epoch);
}

/// G_p: distinct (start, end) pairs connected by p, sorted. Returns nullopt
/// (overflow) when the result or any intermediate join level holds more
/// than `cap` pairs.
inline std::optional<std::vector<EntityPair>> path_pairs(const KnowledgeGraph& g,
                                                         const Path& p,
                                                         std::size_t cap) {
  if (p.empty()) throw std::invalid_argument("empty path");
  std::vector<EntityPair> out;
  std::array<std::size_t, kMaxPathLength> level_sizes{};
  std::vector<std::uint32_t> stamp(g.num_entities(), 0);
  std::uint32_t epoch = 0;
  std::vector<EntityId> frontier;
  std::vector<EntityId> next;
  for (EntityId s : g.sources(p[0])) {
    auto first = g.successors(s, p[0]);
    frontier.assign(first.begin(), first.end());
    level_sizes[0] += frontier.size();
    for (std::size_t i = 1; i < p.size() && !frontier.empty(); ++i) {
      ++epoch;
      next.clear();
      for (EntityId x : frontier) {
        for (EntityId y : g.successors(x, p[i])) {
          if (stamp[y] != epoch) {
            stamp[y] = epoch;
            next.push_back(y);
          }
        }
      }
      frontier.swap(next);
      level_sizes[i] += frontier.size();
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (level_sizes[i] > cap) return std::nullopt;
    }
    std::sort(frontier.begin(), frontier.end());
    for (EntityId t : frontier) out.push_back({s, t});
  }
  return out;
}

/// Relational join {(a, c) : (a, b) in lhs, (b, c) in rhs}; both inputs
/// sorted, output sorted and duplicate free.
inline std::vector<EntityPair> join_pairs(std::span<const EntityPair> lhs,
                                          std::span<const EntityPair> rhs) {
  std::vector<EntityPair> out;
  for (const auto& l : lhs) {
    auto lo = std::lower_bound(rhs.begin(), rhs.end(), EntityPair{l.target, 0});
    for (auto it = lo; it != rhs.end() && it->source == l.target; ++it) {
      out.push_back({l.source, it->target});
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// True iff p connects s to t. Length three meets in the middle from
/// whichever end has the smaller frontier.
inline bool path_exists_between(const KnowledgeGraph& g, EntityId s, EntityId t,
                                const Path& p) {
  switch (p.size()) {
    case 1:
      return g.has_triple(p[0], s, t);
    case 2:
      return detail::sorted_intersects(g.successors(s, p[0]),
                                       g.successors(t, g.inverse(p[1])));
    case 3: {
      auto fwd = g.successors(s, p[0]);
      auto bwd = g.successors(t, g.inverse(p[2]));
      if (fwd.size() <= bwd.size()) {
        for (EntityId x : fwd) {
          if (detail::sorted_intersects(g.successors(x, p[1]), bwd)) return true;
        }
      } else {
        const RelationId back = g.inverse(p[1]);
        for (EntityId y : bwd) {
          if (detail::sorted_intersects(g.successors(y, back), fwd)) return true;
        }
      }
      return false;
    }
    default:
      throw std::invalid_argument("path length must be in [1, 3]");
  }
}

/// The same path walked backwards: (r1, r2, r3) -> (r3^-1, r2^-1, r1^-1).
inline Path reversed(const KnowledgeGraph& g, const Path& p) {
  Path out;
  for (std::size_t i = p.size(); i-- > 0;) out.push_back(g.inverse(p[i]));
  return out;
}

}  // namespace ruledict
