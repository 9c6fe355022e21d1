#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ruledict/graph.hpp"
#include "ruledict/parallel.hpp"
#include "ruledict/rules.hpp"
#include "ruledict/stats.hpp"

namespace ruledict {

struct EarMiningOptions {
  TestParams test;
  /// Bodies with fewer groundings are not tested. 1 tests everything.
  std::uint64_t min_body_support = 1;
  unsigned threads = 1;
};

namespace detail {

/// Sparse counter over EAS ids, reused across heads.
struct EasCounter {
  explicit EasCounter(std::size_t n) : counts(n, 0) {}

  void add(EasId id) {
    if (counts[id]++ == 0) touched.push_back(id);
  }
  void clear() {
    for (EasId id : touched) counts[id] = 0;
    touched.clear();
  }

  std::vector<std::uint32_t> counts;
  std::vector<EasId> touched;
};

}  // namespace detail

/// Tests every b in C_a for a single head a. The connection set is realised
/// by walking the neighbourhoods of G_a, which also yields k = |G_a ∩ G_b|.
inline std::vector<EarRule> mine_ear_for_head(const KnowledgeGraph& g, EasId a,
                                              const EarMiningOptions& options,
                                              detail::EasCounter& counter) {
  std::vector<EarRule> out;
  const auto ga = g.grounding(a);
  if (ga.empty()) return out;
  for (EntityId s : ga) {
    for (EasId b : g.neighbourhood(s)) {
      if (b != a) counter.add(b);
    }
  }
  const double null_rate =
      static_cast<double>(ga.size()) / static_cast<double>(g.num_entities());
  std::sort(counter.touched.begin(), counter.touched.end());
  for (EasId b : counter.touched) {
    const std::uint64_t m = g.grounding(b).size();
    if (m < options.min_body_support) continue;
    const std::uint64_t k = counter.counts[b];
    const Polarity pol = binomial_test(k, m, null_rate, options.test);
    if (pol != Polarity::neutral) out.push_back({g.eas(a), g.eas(b), k, m, pol});
  }
  counter.clear();
  return out;
}

/// Ending anchored rules over every EAS of the graph, ordered by (head, body).
inline std::vector<EarRule> mine_ear(const KnowledgeGraph& g,
                                     const EarMiningOptions& options = {}) {
  auto per_head = parallel_map(
      g.num_eas(), options.threads, [&] { return detail::EasCounter(g.num_eas()); },
      [&](std::size_t a, detail::EasCounter& counter) {
        return mine_ear_for_head(g, static_cast<EasId>(a), options, counter);
      });
  std::vector<EarRule> out;
  for (auto& rules : per_head) {
    out.insert(out.end(), rules.begin(), rules.end());
  }
  return out;
}

}  // namespace ruledict
