#pragma once

// Rule of rule: promoting EARs r0(X, t0) <- r1(X, t1) become rule triples
// (r0 ∘ r1)(t0, t1); EAR mining over that rule graph yields REARs, and each
// REAR proposes new (estimated) EARs on the original graph.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "ruledict/graph.hpp"
#include "ruledict/parallel.hpp"
#include "ruledict/rules.hpp"
#include "ruledict/stats.hpp"
#include "ruledict/task_sets.hpp"

namespace ruledict {

using ReasId = std::uint32_t;

class RuleGraph {
 public:
  /// One rule triple per promoting EAR. With `include_repels` repelling
  /// EARs become rule triples too.
  static RuleGraph build(std::span<const EarRule> ears, bool include_repels = false) {
    struct Triple {
      Reas reas;
      EntityId t0;
      double prob;
    };
    std::vector<Triple> triples;
    for (const auto& e : ears) {
      if (e.polarity != Polarity::promotes &&
          !(include_repels && e.polarity == Polarity::repels)) {
        continue;
      }
      triples.push_back({{{e.head.relation, e.body.relation}, e.body.anchor},
                         e.head.anchor,
                         e.prob()});
    }
    std::sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
      return std::tie(a.reas, a.t0) < std::tie(b.reas, b.t0);
    });
    triples.erase(std::unique(triples.begin(), triples.end(),
                              [](const Triple& a, const Triple& b) {
                                return a.reas == b.reas && a.t0 == b.t0;
                              }),
                  triples.end());
    RuleGraph rg;
    rg.offset_.push_back(0);
    for (const auto& t : triples) {
      if (rg.reas_.empty() || rg.reas_.back() != t.reas) {
        if (!rg.reas_.empty()) rg.offset_.push_back(rg.grounding_.size());
        rg.reas_.push_back(t.reas);
      }
      rg.grounding_.push_back(t.t0);
      rg.backing_.push_back(t.prob);
    }
    rg.offset_.push_back(rg.grounding_.size());
    if (rg.reas_.empty()) rg.offset_.assign(1, 0);

    std::vector<std::pair<EntityId, ReasId>> by_anchor;
    for (ReasId id = 0; id < rg.reas_.size(); ++id) {
      for (EntityId t0 : rg.grounding(id)) by_anchor.push_back({t0, id});
    }
    std::sort(by_anchor.begin(), by_anchor.end());
    for (const auto& [t0, id] : by_anchor) {
      rg.containing_keys_.push_back(t0);
      rg.containing_ids_.push_back(id);
    }
    return rg;
  }

  std::size_t num_reas() const { return reas_.size(); }
  std::size_t num_rule_triples() const { return grounding_.size(); }
  const Reas& reas(ReasId id) const { return reas_.at(id); }
  std::span<const Reas> all_reas() const { return reas_; }

  std::optional<ReasId> find_reas(const Reas& r) const {
    auto it = std::lower_bound(reas_.begin(), reas_.end(), r);
    if (it == reas_.end() || *it != r) return std::nullopt;
    return static_cast<ReasId>(it - reas_.begin());
  }

  /// G_ã: anchors t0 of the rule triples (r0 ∘ r1)(t0, t1), sorted.
  std::span<const EntityId> grounding(ReasId id) const {
    return {grounding_.data() + offset_.at(id), offset_.at(id + 1) - offset_[id]};
  }
  /// Probabilities of the EARs behind grounding(id), parallel to it.
  std::span<const double> backing(ReasId id) const {
    return {backing_.data() + offset_.at(id), offset_.at(id + 1) - offset_[id]};
  }
  std::optional<double> backing_prob(const Reas& r, EntityId t0) const {
    auto id = find_reas(r);
    if (!id) return std::nullopt;
    auto g = grounding(*id);
    auto it = std::lower_bound(g.begin(), g.end(), t0);
    if (it == g.end() || *it != t0) return std::nullopt;
    return backing(*id)[static_cast<std::size_t>(it - g.begin())];
  }

  /// Ids of the REASs that ground on t0, ascending.
  std::span<const ReasId> containing(EntityId t0) const {
    auto [lo, hi] = std::equal_range(containing_keys_.begin(), containing_keys_.end(), t0);
    return {containing_ids_.data() + (lo - containing_keys_.begin()),
            static_cast<std::size_t>(hi - lo)};
  }

 private:
  std::vector<Reas> reas_;
  std::vector<std::size_t> offset_;
  std::vector<EntityId> grounding_;
  std::vector<double> backing_;
  std::vector<EntityId> containing_keys_;
  std::vector<ReasId> containing_ids_;
};

struct RofrOptions {
  TestParams test;
  double alpha = 0.2;
  unsigned threads = 1;
};

namespace detail {

struct ReasCounter {
  explicit ReasCounter(std::size_t n) : counts(n, 0) {}
  void add(ReasId id) {
    if (counts[id]++ == 0) touched.push_back(id);
  }
  void clear() {
    for (ReasId id : touched) counts[id] = 0;
    touched.clear();
  }
  std::vector<std::uint32_t> counts;
  std::vector<ReasId> touched;
};

/// Promotion-only test of head <- body over the entity universe of size N.
inline std::optional<Rear> test_rear(const RuleGraph& rg, ReasId head, ReasId body,
                                     std::uint64_t k, std::size_t n_entities,
                                     const TestParams& test) {
  const std::uint64_t n = rg.grounding(head).size();
  const std::uint64_t m = rg.grounding(body).size();
  const auto interval =
      ci(m, static_cast<double>(n) / static_cast<double>(n_entities), test);
  if (k <= interval.k1) return std::nullopt;
  return Rear{rg.reas(head), rg.reas(body), k, m};
}

/// Mean backing probability of the head's rule triples whose anchor also
/// grounds the body.
inline double mean_backing(const RuleGraph& rg, ReasId head, ReasId body) {
  auto gh = rg.grounding(head);
  auto bh = rg.backing(head);
  auto gb = rg.grounding(body);
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < gh.size(); ++i) {
    while (j < gb.size() && gb[j] < gh[i]) ++j;
    if (j < gb.size() && gb[j] == gh[i]) {
      sum += bh[i];
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

/// EEAR candidates of one REAR for anchors t in G_body \ G_head, optionally
/// restricted to `only` (sorted).
inline void emit_eears(const RuleGraph& rg, ReasId head, ReasId body, const Rear& rear,
                       const RuleStore& store, double alpha,
                       const std::span<const EntityId>* only,
                       std::vector<EearRule>& out) {
  const double avg = mean_backing(rg, head, body);
  const Reas& a = rg.reas(head);
  const Eas rule_body{a.relation.second, a.anchor};
  auto gh = rg.grounding(head);
  for (EntityId t : rg.grounding(body)) {
    if (std::binary_search(gh.begin(), gh.end(), t)) continue;
    if (only && !std::binary_search(only->begin(), only->end(), t)) continue;
    const Eas rule_head{a.relation.first, t};
    if (store.has_ear(rule_head, rule_body)) continue;
    out.push_back({rule_head, rule_body, rear, avg, alpha});
  }
}

/// One EEAR per (head, body): the highest probability wins, ties go to the
/// smaller originating REAR. Sorted by (head, body).
inline std::vector<EearRule> dedup_eears(std::vector<EearRule> rules) {
  std::sort(rules.begin(), rules.end(), [](const EearRule& a, const EearRule& b) {
    if (std::tie(a.head, a.body) != std::tie(b.head, b.body)) {
      return std::tie(a.head, a.body) < std::tie(b.head, b.body);
    }
    if (a.prob() != b.prob()) return a.prob() > b.prob();
    return a.source < b.source;
  });
  rules.erase(std::unique(rules.begin(), rules.end(),
                          [](const EearRule& a, const EearRule& b) {
                            return a.head == b.head && a.body == b.body;
                          }),
              rules.end());
  return rules;
}

}  // namespace detail

inline RuleGraph build_rule_graph(std::span<const EarRule> ears, bool include_repels = false) {
  return RuleGraph::build(ears, include_repels);
}

/// Every promoting REAR over REAS pairs with intersecting groundings,
/// ordered by (head, body).
inline std::vector<Rear> mine_rear(const RuleGraph& rg, std::size_t n_entities,
                                   const TestParams& test = {}, unsigned threads = 1) {
  auto per_head = parallel_map(
      rg.num_reas(), threads, [&] { return detail::ReasCounter(rg.num_reas()); },
      [&](std::size_t i, detail::ReasCounter& counter) {
        const auto head = static_cast<ReasId>(i);
        std::vector<Rear> out;
        for (EntityId t0 : rg.grounding(head)) {
          for (ReasId b : rg.containing(t0)) {
            if (b != head) counter.add(b);
          }
        }
        std::sort(counter.touched.begin(), counter.touched.end());
        for (ReasId b : counter.touched) {
          if (auto rear = detail::test_rear(rg, head, b, counter.counts[b], n_entities, test)) {
            out.push_back(*rear);
          }
        }
        counter.clear();
        return out;
      });
  std::vector<Rear> out;
  for (auto& v : per_head) out.insert(out.end(), v.begin(), v.end());
  return out;
}

/// EEARs for every anchor t in G_b̃ \ G_ã of every REAR, skipping rules the
/// EAR store already holds.
inline std::vector<EearRule> derive_eear(std::span<const Rear> rears, const RuleGraph& rg,
                                         const RuleStore& ear_store, double alpha = 0.2) {
  std::vector<EearRule> out;
  for (const auto& rear : rears) {
    auto head = rg.find_reas(rear.head);
    auto body = rg.find_reas(rear.body);
    if (!head || !body) continue;
    detail::emit_eears(rg, *head, *body, rear, ear_store, alpha, nullptr, out);
  }
  return detail::dedup_eears(std::move(out));
}

/// Task-restricted RofR. For every query relation q in R ∪ R^-1 with query
/// entities Q (test sources of q, or test targets of its base):
///  (i)  REAS bodies grounding on Q are tested against heads of the form
///       (q^-1 ∘ ·), yielding EEARs q^-1(X, s) <- ... for s in Q;
///  (ii) heads (q ∘ r')(·, t') built from EASs r'(X, t') grounding on Q are
///       tested against every intersecting body.
inline std::vector<EearRule> task_specific_rofr(const KnowledgeGraph& g, const TaskSets& tasks,
                                                const RuleStore& ear_store, const RuleGraph& rg,
                                                const RofrOptions& options = {}) {
  std::vector<RelationId> queries;
  for (RelationId r = 0; r < g.num_base_relations(); ++r) {
    queries.push_back(r);
    queries.push_back(g.inverse(r));
  }
  const std::size_t N = g.num_entities();
  auto per_query = parallel_map(
      queries.size(), options.threads, [&] { return detail::ReasCounter(rg.num_reas()); },
      [&](std::size_t qi, detail::ReasCounter& counter) {
        std::vector<EearRule> out;
        const RelationId q = queries[qi];
        const auto Q = tasks.query_entities(g, q);
        if (Q.empty()) return out;

        // (i)
        const RelationId inv_q = g.inverse(q);
        std::vector<ReasId> bodies;
        for (EntityId s : Q) {
          auto c = rg.containing(s);
          bodies.insert(bodies.end(), c.begin(), c.end());
        }
        std::sort(bodies.begin(), bodies.end());
        bodies.erase(std::unique(bodies.begin(), bodies.end()), bodies.end());
        for (ReasId b : bodies) {
          for (EntityId t0 : rg.grounding(b)) {
            for (ReasId a : rg.containing(t0)) {
              if (a != b && rg.reas(a).relation.first == inv_q) counter.add(a);
            }
          }
          std::sort(counter.touched.begin(), counter.touched.end());
          for (ReasId a : counter.touched) {
            if (auto rear =
                    detail::test_rear(rg, a, b, counter.counts[a], N, options.test)) {
              detail::emit_eears(rg, a, b, *rear, ear_store, options.alpha, &Q, out);
            }
          }
          counter.clear();
        }

        // (ii)
        std::vector<ReasId> heads;
        for (EntityId s : Q) {
          for (EasId e : g.neighbourhood(s)) {
            const Eas& body_eas = g.eas(e);
            if (auto id = rg.find_reas({{q, body_eas.relation}, body_eas.anchor})) {
              heads.push_back(*id);
            }
          }
        }
        std::sort(heads.begin(), heads.end());
        heads.erase(std::unique(heads.begin(), heads.end()), heads.end());
        for (ReasId a : heads) {
          for (EntityId t0 : rg.grounding(a)) {
            for (ReasId b : rg.containing(t0)) {
              if (b != a) counter.add(b);
            }
          }
          std::sort(counter.touched.begin(), counter.touched.end());
          for (ReasId b : counter.touched) {
            if (auto rear =
                    detail::test_rear(rg, a, b, counter.counts[b], N, options.test)) {
              detail::emit_eears(rg, a, b, *rear, ear_store, options.alpha, nullptr, out);
            }
          }
          counter.clear();
        }
        return out;
      });
  std::vector<EearRule> all;
  for (auto& v : per_query) all.insert(all.end(), v.begin(), v.end());
  return detail::dedup_eears(std::move(all));
}

}  // namespace ruledict
