#pragma once

// Rule application, filtered ranking and MRR / Hits@N.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ruledict/graph.hpp"
#include "ruledict/parallel.hpp"
#include "ruledict/rules.hpp"
#include "ruledict/stats.hpp"

namespace ruledict {

/// Fixed-length descending probability list, zero padded. Compared
/// lexicographically.
using ScoreVector = std::vector<double>;

inline constexpr std::size_t kDefaultScoreSlots = 10;

inline ScoreVector make_score_vector(std::vector<double> probs,
                                     std::size_t slots = kDefaultScoreSlots) {
  const std::size_t keep = std::min(slots, probs.size());
  std::partial_sort(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(keep),
                    probs.end(), std::greater<>());
  probs.resize(slots, 0.0);
  return probs;
}

struct ScoringOptions {
  std::size_t slots = kDefaultScoreSlots;
  /// Zero the vector of any triple whose entity pair is linked in training.
  bool filtering_active = false;
  bool include_repels = true;
};

enum class RuleKind { ear, eear, car, bisear };

inline std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::ear:
      return "EAR";
    case RuleKind::eear:
      return "EEAR";
    case RuleKind::car:
      return "CAR";
    case RuleKind::bisear:
      return "bisEAR";
  }
  return "";
}

/// A rule that applies to a triple. For EAR / EEAR, `inverse_side` tells
/// whether it matched through r^-1(Y, s) grounding on t rather than
/// r(X, t) grounding on s.
struct FiredRule {
  std::variant<const EarRule*, const EearRule*, const CarRule*, const BisEarRule*> rule;
  double prob = 0.0;
  bool inverse_side = false;

  RuleKind kind() const { return static_cast<RuleKind>(rule.index()); }
};

/// Triple in canonical orientation (base relation); inverse-relation
/// queries are flipped onto their base relation.
struct Query {
  RelationId relation;
  EntityId source;
  EntityId target;
  Direction direction;
};

/// Dense per-candidate probability buckets for one ranking query. Reused
/// across queries; untouched candidates hold the zero vector.
class CandidateScores {
 public:
  void reset(std::size_t n_entities) {
    for (EntityId c : touched_) buckets_[c].clear();
    touched_.clear();
    buckets_.resize(n_entities);
    finished_ = false;
  }
  void add(EntityId c, double p) {
    if (buckets_[c].empty()) touched_.push_back(c);
    buckets_[c].push_back(p);
  }
  void finish(std::size_t slots) {
    std::sort(touched_.begin(), touched_.end());
    for (EntityId c : touched_) buckets_[c] = make_score_vector(std::move(buckets_[c]), slots);
    zero_.assign(slots, 0.0);
    finished_ = true;
  }
  void zero_out(EntityId c) {
    if (!buckets_[c].empty()) std::fill(buckets_[c].begin(), buckets_[c].end(), 0.0);
  }
  const ScoreVector& vector_of(EntityId c) const {
    return buckets_[c].empty() ? zero_ : buckets_[c];
  }
  std::span<const EntityId> touched() const { return touched_; }
  const ScoreVector& zero() const { return zero_; }

 private:
  std::vector<std::vector<double>> buckets_;
  std::vector<EntityId> touched_;
  ScoreVector zero_;
  bool finished_ = false;
};

class Scorer {
 public:
  Scorer(const KnowledgeGraph& g, const RuleStore& store, ScoringOptions options = {})
      : g_(g), store_(store), options_(options), by_body_(g.num_eas()) {
    for (const auto& [head, rules] : store.ear_map()) {
      for (const auto& r : rules) {
        if (!usable(r.polarity)) continue;
        if (auto b = g.find_eas(r.body)) by_body_[*b].push_back({&r});
      }
    }
    for (const auto& [head, rules] : store.eear_map()) {
      for (const auto& r : rules) {
        if (auto b = g.find_eas(r.body)) by_body_[*b].push_back({&r});
      }
    }
  }

  const KnowledgeGraph& graph() const { return g_; }
  const ScoringOptions& options() const { return options_; }

  Query canonical(RelationId r, EntityId s, EntityId t, Direction d) const {
    if (!g_.is_inverse(r)) return {r, s, t, d};
    return {g_.base_of(r), t, s, d == Direction::head ? Direction::tail : Direction::head};
  }

  /// Every rule that applies to r(s, t), in collection order.
  std::vector<FiredRule> fired_rules(RelationId r, EntityId s, EntityId t, Direction d) const {
    const Query q = canonical(r, s, t, d);
    std::vector<FiredRule> out;
    auto grounds = [&](const Eas& body, EntityId e) {
      return detail::sorted_contains(g_.grounding(body), e);
    };
    for (bool inverse_side : {false, true}) {
      const Eas head = inverse_side ? Eas{g_.inverse(q.relation), q.source}
                                    : Eas{q.relation, q.target};
      const EntityId at = inverse_side ? q.target : q.source;
      for (const auto& rule : store_.ear(head)) {
        if (usable(rule.polarity) && grounds(rule.body, at)) {
          out.push_back({&rule, rule.prob(), inverse_side});
        }
      }
      for (const auto& rule : store_.eear(head)) {
        if (grounds(rule.body, at)) out.push_back({&rule, rule.prob(), inverse_side});
      }
    }
    for (const auto& rule : store_.car(q.relation)) {
      if (usable(rule.polarity) && path_exists_between(g_, q.source, q.target, rule.body)) {
        out.push_back({&rule, rule.prob()});
      }
    }
    for (const auto& rule : store_.bisear(q.relation, q.direction)) {
      if (usable(rule.polarity) && grounds(rule.body_x, q.source) &&
          grounds(rule.body_y, q.target)) {
        out.push_back({&rule, rule.prob()});
      }
    }
    return out;
  }

  ScoreVector score_triple(RelationId r, EntityId s, EntityId t, Direction d) const {
    if (options_.filtering_active && g_.linked(s, t)) return ScoreVector(options_.slots, 0.0);
    std::vector<double> probs;
    for (const auto& f : fired_rules(r, s, t, d)) probs.push_back(f.prob);
    return make_score_vector(std::move(probs), options_.slots);
  }

  /// Score vectors of every candidate for the open slot of r(known, ?)
  /// (direction tail) or r(?, known) (direction head).
  void score_candidates(RelationId r, EntityId known, Direction d, CandidateScores& out) const {
    out.reset(g_.num_entities());
    const Query q = g_.is_inverse(r)
                        ? Query{g_.base_of(r), 0, 0,
                                d == Direction::head ? Direction::tail : Direction::head}
                        : Query{r, 0, 0, d};
    // Query relation seen from the known entity: q_rel(known, candidate).
    const RelationId q_rel = q.direction == Direction::tail ? q.relation : g_.inverse(q.relation);

    // Rules with head q_rel(X, c) whose body grounds on the known entity.
    for (EasId b : g_.neighbourhood(known)) {
      for (const auto& ref : by_body_[b]) {
        std::visit(
            [&](const auto* rule) {
              if (rule->head.relation == q_rel) out.add(rule->head.anchor, rule->prob());
            },
            ref.rule);
      }
    }
    // Rules with head q_rel^-1(Y, known): every grounding of the body.
    const Eas inverse_head{g_.inverse(q_rel), known};
    for (const auto& rule : store_.ear(inverse_head)) {
      if (!usable(rule.polarity)) continue;
      for (EntityId c : g_.grounding(rule.body)) out.add(c, rule.prob());
    }
    for (const auto& rule : store_.eear(inverse_head)) {
      for (EntityId c : g_.grounding(rule.body)) out.add(c, rule.prob());
    }
    if (!store_.car(q.relation).empty()) {
      std::vector<std::uint32_t> stamp(g_.num_entities(), 0);
      std::uint32_t epoch = 0;
      for (const auto& rule : store_.car(q.relation)) {
        if (!usable(rule.polarity)) continue;
        const Path p = q.direction == Direction::tail ? rule.body : reversed(g_, rule.body);
        for (EntityId c : path_targets(g_, known, p, stamp, epoch)) out.add(c, rule.prob());
      }
    }
    for (const auto& rule : store_.bisear(q.relation, q.direction)) {
      if (!usable(rule.polarity)) continue;
      const Eas& known_side = q.direction == Direction::tail ? rule.body_x : rule.body_y;
      const Eas& open_side = q.direction == Direction::tail ? rule.body_y : rule.body_x;
      if (!detail::sorted_contains(g_.grounding(known_side), known)) continue;
      for (EntityId c : g_.grounding(open_side)) out.add(c, rule.prob());
    }
    out.finish(options_.slots);
    if (options_.filtering_active) {
      for (EntityId c : out.touched()) {
        if (g_.linked(known, c)) out.zero_out(c);
      }
    }
  }

 private:
  struct BodyRef {
    std::variant<const EarRule*, const EearRule*> rule;
  };

  bool usable(Polarity p) const { return options_.include_repels || p != Polarity::repels; }

  const KnowledgeGraph& g_;
  const RuleStore& store_;
  ScoringOptions options_;
  std::vector<std::vector<BodyRef>> by_body_;
};

/// Mean rank under ties: 1 + greater + equal / 2, rounded half up.
inline std::uint64_t mean_rank(std::uint64_t greater, std::uint64_t equal) {
  return 1 + greater + (equal + 1) / 2;
}

/// Answers of every known (train / valid / test) triple, for the filtered
/// protocol.
class KnownTriples {
 public:
  void add(RelationId r, EntityId s, EntityId t) {
    tails_[key(r, s)].push_back(t);
    heads_[key(r, t)].push_back(s);
  }
  void add_all(const KnowledgeGraph& g, std::span<const RawTriple> triples) {
    for (const auto& raw : triples) {
      auto r = g.find_relation(raw.relation);
      auto s = g.find_entity(raw.head);
      auto t = g.find_entity(raw.tail);
      if (r && s && t) add(*r, *s, *t);
    }
  }
  void finalize() {
    for (auto* m : {&tails_, &heads_}) {
      for (auto& [k, v] : *m) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      }
    }
  }
  /// Entities e such that r(known, e) (tail) or r(e, known) (head) is known.
  std::span<const EntityId> answers(RelationId r, EntityId known, Direction d) const {
    const auto& m = d == Direction::tail ? tails_ : heads_;
    auto it = m.find(key(r, known));
    if (it == m.end()) return {};
    return it->second;
  }

 private:
  static std::uint64_t key(RelationId r, EntityId e) {
    return (static_cast<std::uint64_t>(r) << 32) | e;
  }
  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> heads_;
};

struct RankResult {
  std::uint64_t rank = 0;
  std::uint64_t greater = 0;
  std::uint64_t equal = 0;
  ScoreVector true_vector;
};

/// Filtered rank of the true answer against every entity in the open slot.
/// `answer` may be absent (entity unknown to the graph); it then scores as
/// the zero vector and no candidate is the true one.
inline RankResult rank_candidates(const CandidateScores& scores, std::size_t n_entities,
                                  std::optional<EntityId> answer,
                                  std::span<const EntityId> filtered) {
  RankResult res;
  res.true_vector = answer ? scores.vector_of(*answer) : scores.zero();
  auto excluded = [&](EntityId c) {
    return (answer && c == *answer) || detail::sorted_contains(filtered, c);
  };
  std::uint64_t excluded_count = answer ? 1 : 0;
  for (EntityId c : filtered) {
    if (!(answer && c == *answer)) ++excluded_count;
  }
  std::uint64_t touched_counted = 0;
  for (EntityId c : scores.touched()) {
    if (excluded(c)) continue;
    ++touched_counted;
    const auto& v = scores.vector_of(c);
    if (v > res.true_vector) {
      ++res.greater;
    } else if (v == res.true_vector) {
      ++res.equal;
    }
  }
  const std::uint64_t untouched = n_entities - excluded_count - touched_counted;
  if (scores.zero() > res.true_vector) {
    res.greater += untouched;
  } else if (scores.zero() == res.true_vector) {
    res.equal += untouched;
  }
  res.rank = mean_rank(res.greater, res.equal);
  return res;
}

struct Metrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::uint64_t count = 0;
};

class MetricsAccumulator {
 public:
  void add(std::uint64_t rank) {
    rr_sum_ += 1.0 / static_cast<double>(rank);
    h1_ += rank <= 1;
    h3_ += rank <= 3;
    h10_ += rank <= 10;
    ++count_;
  }
  Metrics finish() const {
    Metrics m;
    m.count = count_;
    if (count_ == 0) return m;
    const double n = static_cast<double>(count_);
    m.mrr = rr_sum_ / n;
    m.hits1 = 100.0 * static_cast<double>(h1_) / n;
    m.hits3 = 100.0 * static_cast<double>(h3_) / n;
    m.hits10 = 100.0 * static_cast<double>(h10_) / n;
    return m;
  }

 private:
  double rr_sum_ = 0.0;
  std::uint64_t h1_ = 0, h3_ = 0, h10_ = 0, count_ = 0;
};

struct RankRecord {
  std::size_t test_index = 0;
  Direction direction = Direction::tail;
  std::uint64_t rank = 0;
  double top_score = 0.0;
  bool resolvable = true;
};

struct EvalReport {
  Metrics overall;
  Metrics head;
  Metrics tail;
  std::map<std::string, Metrics> per_relation;
  std::uint64_t n_test = 0;
  std::uint64_t n_unresolvable = 0;
  bool filtering_active = false;
  std::vector<RankRecord> ranks;
};

/// Head and tail prediction for every test triple; metrics averaged over
/// both directions.
inline EvalReport evaluate(const Scorer& scorer, std::span<const RawTriple> test,
                           const KnownTriples& known, unsigned threads = 1) {
  const KnowledgeGraph& g = scorer.graph();
  const std::size_t N = g.num_entities();
  struct Outcome {
    std::array<RankRecord, 2> records;
  };
  auto outcomes = parallel_map(
      test.size(), threads, [] { return CandidateScores(); },
      [&](std::size_t i, CandidateScores& scores) {
        Outcome o;
        const auto& raw = test[i];
        const auto r = g.find_relation(raw.relation);
        const auto s = g.find_entity(raw.head);
        const auto t = g.find_entity(raw.tail);
        const bool resolvable = r && s && t;
        for (Direction d : {Direction::head, Direction::tail}) {
          const auto known_side = d == Direction::tail ? s : t;
          const auto answer = d == Direction::tail ? t : s;
          RankRecord rec;
          rec.test_index = i;
          rec.direction = d;
          rec.resolvable = resolvable;
          if (r && known_side) {
            scorer.score_candidates(*r, *known_side, d, scores);
            auto res = rank_candidates(scores, N, answer, known.answers(*r, *known_side, d));
            rec.rank = res.rank;
            rec.top_score = res.true_vector.empty() ? 0.0 : res.true_vector[0];
          } else {
            // Nothing resolvable to score: every candidate ties with the answer.
            scores.reset(N);
            scores.finish(scorer.options().slots);
            rec.rank = rank_candidates(scores, N, answer, {}).rank;
          }
          o.records[d == Direction::head ? 0 : 1] = rec;
        }
        return o;
      });

  EvalReport report;
  report.n_test = test.size();
  report.filtering_active = scorer.options().filtering_active;
  MetricsAccumulator all, head, tail;
  std::map<std::string, MetricsAccumulator> per_relation;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].records[0].resolvable) ++report.n_unresolvable;
    for (const auto& rec : outcomes[i].records) {
      all.add(rec.rank);
      (rec.direction == Direction::head ? head : tail).add(rec.rank);
      per_relation[test[i].relation].add(rec.rank);
      report.ranks.push_back(rec);
    }
  }
  report.overall = all.finish();
  report.head = head.finish();
  report.tail = tail.finish();
  for (const auto& [rel, acc] : per_relation) report.per_relation[rel] = acc.finish();
  return report;
}

struct PairFilteringCheck {
  std::uint64_t n = 0;  // distinct training pairs
  std::uint64_t m = 0;  // distinct validation pairs
  std::uint64_t k = 0;  // validation pairs also seen in training
  ConfidenceInterval interval;
  bool pairs_removed = false;
};

/// Distinct directed (s, t) pairs of the resolvable base-relation triples.
inline std::vector<EntityPair> directed_pairs(const KnowledgeGraph& g,
                                              std::span<const RawTriple> triples) {
  std::vector<EntityPair> out;
  for (const auto& raw : triples) {
    auto s = g.find_entity(raw.head);
    auto t = g.find_entity(raw.tail);
    if (s && t) out.push_back({*s, *t});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Distinct directed pairs over all base relations of the training graph.
inline std::vector<EntityPair> training_pairs(const KnowledgeGraph& g) {
  std::vector<EntityPair> out;
  for (RelationId r = 0; r < g.num_base_relations(); ++r) {
    auto p = g.pairs(r);
    out.insert(out.end(), p.begin(), p.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Detects splits built by dropping validation pairs already linked in
/// training: the overlap k falls below the interval of B(m, n / N^2).
inline PairFilteringCheck detect_pair_filtering(std::span<const EntityPair> train_pairs,
                                                std::span<const EntityPair> valid_pairs,
                                                std::size_t n_entities,
                                                const TestParams& test = {}) {
  PairFilteringCheck out;
  out.n = train_pairs.size();
  out.m = valid_pairs.size();
  out.k = detail::sorted_intersection_size(train_pairs, valid_pairs);
  const double N = static_cast<double>(n_entities);
  out.interval = ci(out.m, static_cast<double>(out.n) / (N * N), test);
  out.pairs_removed = out.k < out.interval.k0;
  return out;
}

}  // namespace ruledict
