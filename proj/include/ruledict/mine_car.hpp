#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ruledict/graph.hpp"
#include "ruledict/parallel.hpp"
#include "ruledict/rules.hpp"
#include "ruledict/stats.hpp"
#include "ruledict/task_sets.hpp"

namespace ruledict {

struct CarMiningOptions {
  TestParams test;
  std::size_t max_len = 3;
  std::size_t pair_cap = 5'000'000;
  unsigned threads = 1;
};

struct CarMiningResult {
  std::vector<CarRule> rules;
  /// Paths skipped because G_p exceeded the pair cap.
  std::vector<Path> overflowed;
};

/// A rule r <- p is only useful for the test queries when p starts at a
/// test source of r or ends at a test target of r.
inline bool car_rule_useful(const KnowledgeGraph& g, const TaskSets& tasks, RelationId r,
                            const Path& p) {
  const auto& sets = tasks[r];
  return detail::sorted_intersects(g.sources(p.front()),
                                   std::span<const EntityId>(sets.test_sources)) ||
         detail::sorted_intersects(g.targets(p.back()),
                                   std::span<const EntityId>(sets.test_targets));
}

/// Tests path p against every base relation passing the task filter, given
/// its connected pairs G_p.
inline std::vector<CarRule> mine_car_for_path(const KnowledgeGraph& g, const TaskSets& tasks,
                                              const Path& p,
                                              std::span<const EntityPair> path_pairs,
                                              const TestParams& test) {
  std::vector<CarRule> out;
  const double n_entities = static_cast<double>(g.num_entities());
  const std::uint64_t m = path_pairs.size();
  for (RelationId r = 0; r < g.num_base_relations(); ++r) {
    if (p.size() == 1 && p[0] == r) continue;
    if (!car_rule_useful(g, tasks, r, p)) continue;
    const auto gr = g.pairs(r);
    const std::uint64_t k = detail::sorted_intersection_size(gr, path_pairs);
    const double null_rate = static_cast<double>(gr.size()) / (n_entities * n_entities);
    const Polarity pol = binomial_test(k, m, null_rate, test);
    if (pol != Polarity::neutral) out.push_back({r, p, k, m, pol});
  }
  return out;
}

/// Cyclic anchored (Horn clause) rules for paths of length <= max_len.
/// Output is ordered by (path, head relation).
inline CarMiningResult mine_car(const KnowledgeGraph& g, const TaskSets& tasks,
                                const CarMiningOptions& options = {}) {
  const auto paths = enumerate_candidate_paths(g, options.max_len);
  struct PathOutcome {
    std::vector<CarRule> rules;
    bool overflow = false;
  };
  auto outcomes = parallel_map(
      paths.size(), options.threads, [] { return 0; },
      [&](std::size_t i, int&) {
        PathOutcome o;
        const Path& p = paths[i];
        bool wanted = false;
        for (RelationId r = 0; r < g.num_base_relations() && !wanted; ++r) {
          wanted = !(p.size() == 1 && p[0] == r) && car_rule_useful(g, tasks, r, p);
        }
        if (!wanted) return o;
        auto gp = path_pairs(g, p, options.pair_cap);
        if (!gp) {
          o.overflow = true;
          return o;
        }
        o.rules = mine_car_for_path(g, tasks, p, *gp, options.test);
        return o;
      });
  CarMiningResult result;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (outcomes[i].overflow) result.overflowed.push_back(paths[i]);
    result.rules.insert(result.rules.end(), outcomes[i].rules.begin(),
                        outcomes[i].rules.end());
  }
  return result;
}

}  // namespace ruledict
