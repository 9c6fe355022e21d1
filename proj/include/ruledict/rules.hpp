#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "ruledict/graph.hpp"
#include "ruledict/stats.hpp"

namespace ruledict {

/// Which end of a triple is being predicted. `head` is source prediction
/// r(?, t); `tail` is target prediction r(s, ?).
enum class Direction { head, tail };

inline std::string_view to_string(Direction d) {
  return d == Direction::head ? "head" : "tail";
}

/// k/m : r(X, t) <- r1(X, t1)
struct EarRule {
  Eas head;
  Eas body;
  std::uint64_t k = 0;
  std::uint64_t m = 0;
  Polarity polarity = Polarity::neutral;

  double prob() const { return static_cast<double>(k) / static_cast<double>(m); }
  bool operator==(const EarRule&) const = default;
};

/// k/m : r(X, Y) <- path(X, Y)
struct CarRule {
  RelationId head = 0;
  Path body;
  std::uint64_t k = 0;
  std::uint64_t m = 0;
  Polarity polarity = Polarity::neutral;

  double prob() const { return static_cast<double>(k) / static_cast<double>(m); }
  bool operator==(const CarRule&) const = default;
};

/// k/(m1 m2) : r(X, Y) <- r1(X, t1) & r2(Y, t2). `body_x` constrains the
/// source, `body_y` the target. `direction` is the prediction task the rule
/// was mined for.
struct BisEarRule {
  RelationId relation = 0;
  Eas body_x;
  Eas body_y;
  std::uint64_t k = 0;
  std::uint64_t m1 = 0;
  std::uint64_t m2 = 0;
  Polarity polarity = Polarity::neutral;
  Direction direction = Direction::tail;

  double prob() const {
    return static_cast<double>(k) / (static_cast<double>(m1) * static_cast<double>(m2));
  }
  bool operator==(const BisEarRule&) const = default;
};

/// r0 ∘ r1, the relation of a rule triple (r0 ∘ r1)(t0, t1).
struct CompoundRelation {
  RelationId first = 0;
  RelationId second = 0;
  auto operator<=>(const CompoundRelation&) const = default;
};

/// Rule ending anchored structure (r0 ∘ r1)(T, t1).
struct Reas {
  CompoundRelation relation;
  EntityId anchor = 0;
  auto operator<=>(const Reas&) const = default;
};

/// Promoting rule over the rule graph: k/m : head <- body.
struct Rear {
  Reas head;
  Reas body;
  std::uint64_t k = 0;
  std::uint64_t m = 0;

  double confidence() const { return static_cast<double>(k) / static_cast<double>(m); }
  auto operator<=>(const Rear&) const = default;
};

/// Estimated EAR derived from a REAR: alpha * conf * avg_prob.
struct EearRule {
  Eas head;
  Eas body;
  Rear source;
  double avg_prob = 0.0;
  double alpha = 0.2;

  double rear_confidence() const { return source.confidence(); }
  double prob() const { return alpha * source.confidence() * avg_prob; }
  bool operator==(const EearRule&) const = default;
};

namespace detail {

struct KeyHash {
  template <class... Ts>
  std::size_t operator()(const std::tuple<Ts...>& t) const {
    std::size_t h = 0;
    std::apply([&](const auto&... xs) { ((h = mix(h, hash_one(xs))), ...); }, t);
    return h;
  }

 private:
  static std::size_t mix(std::size_t h, std::size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
  static std::size_t hash_one(const Eas& e) {
    return (static_cast<std::size_t>(e.relation) << 32) ^ e.anchor;
  }
  static std::size_t hash_one(const Path& p) {
    std::size_t h = p.size();
    for (RelationId r : p) h = mix(h, r);
    return h;
  }
  static std::size_t hash_one(RelationId r) { return r; }
  static std::size_t hash_one(Direction d) { return static_cast<std::size_t>(d); }
};

template <class Rule, class BodyKey>
void insert_sorted(std::vector<Rule>& list, Rule rule, BodyKey body_key) {
  auto before = [&](const Rule& a, const Rule& b) {
    if (a.prob() != b.prob()) return a.prob() > b.prob();
    return body_key(a) < body_key(b);
  };
  list.insert(std::upper_bound(list.begin(), list.end(), rule, before), std::move(rule));
}

}  // namespace detail

/// Per-type nested dictionaries of rules keyed by what they predict. Each
/// list is sorted by descending probability, then by body.
class RuleStore {
 public:
  using EarKey = std::tuple<Eas, Eas>;
  using CarKey = std::tuple<RelationId, Path>;
  using BisEarKey = std::tuple<RelationId, Direction, Eas, Eas>;

  /// Returns false (and counts a rejection) on a duplicate (head, body).
  /// An EAR replaces an EEAR with the same (head, body).
  bool insert(const EarRule& rule) {
    if (!ear_keys_.insert({rule.head, rule.body}).second) return reject();
    if (eear_keys_.erase({rule.head, rule.body}) > 0) {
      auto it = eear_.find(rule.head);
      std::erase_if(it->second, [&](const EearRule& e) { return e.body == rule.body; });
      if (it->second.empty()) eear_.erase(it);
      ++rejected_;
    }
    detail::insert_sorted(ear_[rule.head], rule, [](const EarRule& r) { return r.body; });
    return true;
  }

  bool insert(const CarRule& rule) {
    if (!car_keys_.insert({rule.head, rule.body}).second) return reject();
    detail::insert_sorted(car_[rule.head], rule, [](const CarRule& r) { return r.body; });
    return true;
  }

  bool insert(const BisEarRule& rule) {
    if (!bisear_keys_.insert({rule.relation, rule.direction, rule.body_x, rule.body_y})
             .second) {
      return reject();
    }
    auto& target = rule.direction == Direction::head ? bisear_head_ : bisear_tail_;
    detail::insert_sorted(target[rule.relation], rule, [](const BisEarRule& r) {
      return std::tuple(r.body_x, r.body_y);
    });
    return true;
  }

  bool insert(const EearRule& rule) {
    if (ear_keys_.contains({rule.head, rule.body})) return reject();
    if (!eear_keys_.insert({rule.head, rule.body}).second) return reject();
    detail::insert_sorted(eear_[rule.head], rule, [](const EearRule& r) { return r.body; });
    return true;
  }

  template <class Range>
  void insert_all(const Range& rules) {
    for (const auto& r : rules) insert(r);
  }

  std::span<const EarRule> ear(const Eas& head) const { return lookup(ear_, head); }
  std::span<const EearRule> eear(const Eas& head) const { return lookup(eear_, head); }
  std::span<const CarRule> car(RelationId head) const { return lookup(car_, head); }
  std::span<const BisEarRule> bisear(RelationId r, Direction d) const {
    return lookup(d == Direction::head ? bisear_head_ : bisear_tail_, r);
  }

  bool has_ear(const Eas& head, const Eas& body) const {
    return ear_keys_.contains({head, body});
  }

  const std::map<Eas, std::vector<EarRule>>& ear_map() const { return ear_; }
  const std::map<Eas, std::vector<EearRule>>& eear_map() const { return eear_; }
  const std::map<RelationId, std::vector<CarRule>>& car_map() const { return car_; }
  const std::map<RelationId, std::vector<BisEarRule>>& bisear_map(Direction d) const {
    return d == Direction::head ? bisear_head_ : bisear_tail_;
  }

  std::size_t ear_count() const { return ear_keys_.size(); }
  std::size_t eear_count() const { return eear_keys_.size(); }
  std::size_t car_count() const { return car_keys_.size(); }
  std::size_t bisear_count() const { return bisear_keys_.size(); }
  std::size_t rejected() const { return rejected_; }

  bool operator==(const RuleStore& o) const {
    return ear_ == o.ear_ && eear_ == o.eear_ && car_ == o.car_ &&
           bisear_head_ == o.bisear_head_ && bisear_tail_ == o.bisear_tail_;
  }

 private:
  bool reject() {
    ++rejected_;
    return false;
  }

  template <class Map, class Key>
  static std::span<const typename Map::mapped_type::value_type> lookup(const Map& m,
                                                                      const Key& k) {
    auto it = m.find(k);
    if (it == m.end()) return {};
    return it->second;
  }

  std::map<Eas, std::vector<EarRule>> ear_;
  std::map<Eas, std::vector<EearRule>> eear_;
  std::map<RelationId, std::vector<CarRule>> car_;
  std::map<RelationId, std::vector<BisEarRule>> bisear_head_;
  std::map<RelationId, std::vector<BisEarRule>> bisear_tail_;

  std::unordered_set<EarKey, detail::KeyHash> ear_keys_;
  std::unordered_set<EarKey, detail::KeyHash> eear_keys_;
  std::unordered_set<CarKey, detail::KeyHash> car_keys_;
  std::unordered_set<BisEarKey, detail::KeyHash> bisear_keys_;
  std::size_t rejected_ = 0;
};

}  // namespace ruledict
