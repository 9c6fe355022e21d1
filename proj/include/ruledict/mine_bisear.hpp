#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <tuple>
#include <span>
#include <unordered_map>
#include <vector>

#include "ruledict/graph.hpp"
#include "ruledict/mine_ear.hpp"
#include "ruledict/parallel.hpp"
#include "ruledict/rules.hpp"
#include "ruledict/stats.hpp"
#include "ruledict/task_sets.hpp"

namespace ruledict {

/// EAS sets grounding on the training-side (hatted) and test-side entity
/// sets of one base relation. All sorted by EAS id.
struct BisEarConnectionSets {
  std::vector<EasId> train_source;  // Ĉ_{r,S}
  std::vector<EasId> train_target;  // Ĉ_{r,T}
  std::vector<EasId> test_source;   // C_{r,S}
  std::vector<EasId> test_target;   // C_{r,T}
};

/// EASs whose grounding intersects `entities`.
inline std::vector<EasId> eas_grounding_on_any(const KnowledgeGraph& g,
                                               std::span<const EntityId> entities) {
  std::vector<EasId> out;
  for (EntityId e : entities) {
    auto nb = g.neighbourhood(e);
    out.insert(out.end(), nb.begin(), nb.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<BisEarConnectionSets> build_connection_sets(const KnowledgeGraph& g,
                                                               const TaskSets& tasks) {
  std::vector<BisEarConnectionSets> out(g.num_base_relations());
  for (RelationId r = 0; r < g.num_base_relations(); ++r) {
    const auto& sets = tasks[r];
    out[r].train_source = eas_grounding_on_any(g, sets.train_sources);
    out[r].train_target = eas_grounding_on_any(g, sets.train_targets);
    out[r].test_source = eas_grounding_on_any(g, sets.test_sources);
    out[r].test_target = eas_grounding_on_any(g, sets.test_targets);
  }
  return out;
}

struct BisEarMiningOptions {
  TestParams test;
  /// Body pairs with m1 * m2 above this are skipped.
  std::uint64_t pair_cap = 10'000'000;
  unsigned threads = 1;
};

struct BisEarMiningResult {
  std::vector<BisEarRule> rules;
  std::uint64_t skipped_pairs = 0;
};

namespace detail {

struct SizeGroup {
  std::uint64_t size;
  std::vector<EasId> members;
};

inline std::vector<SizeGroup> group_by_grounding_size(const KnowledgeGraph& g,
                                                      std::span<const EasId> ids) {
  std::map<std::uint64_t, std::vector<EasId>> by_size;
  for (EasId id : ids) by_size[g.grounding(id).size()].push_back(id);
  std::vector<SizeGroup> out;
  for (auto& [size, members] : by_size) out.push_back({size, std::move(members)});
  return out;
}

struct BisEarScratch {
  explicit BisEarScratch(std::size_t n_eas) : counter(n_eas) {}
  EasCounter counter;
  // Keyed by trials; valid for `interval_relation` only.
  std::unordered_map<std::uint64_t, ConfidenceInterval> intervals;
  RelationId interval_relation = std::numeric_limits<RelationId>::max();
};

struct BisEarJob {
  RelationId relation;
  Direction direction;
  EasId anchored;
};

struct BisEarJobOutcome {
  std::vector<BisEarRule> rules;
  std::uint64_t skipped = 0;
};

/// One anchored body against every free body of the pass. For source
/// prediction (head) the anchored body constrains the target and the free
/// body the source; for target prediction (tail) the roles swap.
inline BisEarJobOutcome mine_bisear_job(const KnowledgeGraph& g, const BisEarJob& job,
                                        std::span<const SizeGroup> free_groups,
                                        const BisEarMiningOptions& options,
                                        BisEarScratch& scratch) {
  BisEarJobOutcome out;
  const RelationId r = job.relation;
  const RelationId walk = job.direction == Direction::head ? g.inverse(r) : r;
  auto& counter = scratch.counter;
  if (scratch.interval_relation != r) {
    scratch.intervals.clear();
    scratch.interval_relation = r;
  }
  for (EntityId x : g.grounding(job.anchored)) {
    for (EntityId y : g.successors(x, walk)) {
      for (EasId b : g.neighbourhood(y)) counter.add(b);
    }
  }

  const double n_entities = static_cast<double>(g.num_entities());
  const double null_rate = static_cast<double>(g.pairs(r).size()) / (n_entities * n_entities);
  const std::uint64_t anchored_size = g.grounding(job.anchored).size();
  auto interval_for = [&](std::uint64_t trials) -> const ConfidenceInterval& {
    auto it = scratch.intervals.find(trials);
    if (it == scratch.intervals.end()) {
      it = scratch.intervals.emplace(trials, ci(trials, null_rate, options.test)).first;
    }
    return it->second;
  };
  auto emit = [&](EasId free, std::uint64_t k, std::uint64_t free_size, Polarity pol) {
    BisEarRule rule;
    rule.relation = r;
    rule.k = k;
    rule.polarity = pol;
    rule.direction = job.direction;
    if (job.direction == Direction::head) {
      rule.body_x = g.eas(free);
      rule.body_y = g.eas(job.anchored);
      rule.m1 = free_size;
      rule.m2 = anchored_size;
    } else {
      rule.body_x = g.eas(job.anchored);
      rule.body_y = g.eas(free);
      rule.m1 = anchored_size;
      rule.m2 = free_size;
    }
    out.rules.push_back(rule);
  };

  for (const auto& group : free_groups) {
    const std::uint64_t trials = group.size * anchored_size;
    if (trials > options.pair_cap) {
      out.skipped += group.members.size();
      continue;
    }
    const ConfidenceInterval& interval = interval_for(trials);
    if (interval.k0 == 0) {
      continue;  // k = 0 is inside the interval; only counted bodies can fire.
    }
    // A zero count already repels: every member of the group is decided.
    for (EasId free : group.members) {
      const std::uint64_t k = counter.counts[free];
      const Polarity pol = classify(k, interval);
      if (pol != Polarity::neutral) emit(free, k, group.size, pol);
      if (k > 0) counter.counts[free] = 0;
    }
  }
  // Remaining counted bodies live in groups with k0 == 0.
  std::sort(counter.touched.begin(), counter.touched.end());
  for (EasId free : counter.touched) {
    const std::uint64_t k = counter.counts[free];
    if (k == 0) continue;
    const std::uint64_t free_size = g.grounding(free).size();
    const std::uint64_t trials = free_size * anchored_size;
    if (trials > options.pair_cap) continue;
    const Polarity pol = classify(k, interval_for(trials));
    if (pol != Polarity::neutral) emit(free, k, free_size, pol);
  }
  counter.clear();
  return out;
}

}  // namespace detail

/// Canonical ordering for bisEAR rule lists.
inline bool bisear_less(const BisEarRule& a, const BisEarRule& b) {
  return std::tie(a.relation, a.direction, a.body_x, a.body_y) <
         std::tie(b.relation, b.direction, b.body_x, b.body_y);
}

/// Both passes: source prediction (anchored bodies from C_{r,T} against
/// Ĉ_{r,S}) and target prediction (C_{r,S} against Ĉ_{r,T}).
inline BisEarMiningResult mine_bisear(const KnowledgeGraph& g, const TaskSets& tasks,
                                      const BisEarMiningOptions& options = {}) {
  const auto conn = build_connection_sets(g, tasks);
  std::vector<std::vector<detail::SizeGroup>> free_head(g.num_base_relations());
  std::vector<std::vector<detail::SizeGroup>> free_tail(g.num_base_relations());
  std::vector<detail::BisEarJob> jobs;
  for (RelationId r = 0; r < g.num_base_relations(); ++r) {
    if (g.pairs(r).empty()) continue;
    free_head[r] = detail::group_by_grounding_size(g, conn[r].train_source);
    free_tail[r] = detail::group_by_grounding_size(g, conn[r].train_target);
    for (EasId b : conn[r].test_target) jobs.push_back({r, Direction::head, b});
    for (EasId b : conn[r].test_source) jobs.push_back({r, Direction::tail, b});
  }
  auto outcomes = parallel_map(
      jobs.size(), options.threads, [&] { return detail::BisEarScratch(g.num_eas()); },
      [&](std::size_t i, detail::BisEarScratch& scratch) {
        const auto& job = jobs[i];
        const auto& groups =
            job.direction == Direction::head ? free_head[job.relation] : free_tail[job.relation];
        return detail::mine_bisear_job(g, job, groups, options, scratch);
      });
  BisEarMiningResult result;
  for (auto& o : outcomes) {
    result.rules.insert(result.rules.end(), o.rules.begin(), o.rules.end());
    result.skipped_pairs += o.skipped;
  }
  std::sort(result.rules.begin(), result.rules.end(), bisear_less);
  return result;
}

}  // namespace ruledict
