#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "ruledict/graph.hpp"

namespace ruledict {

/// Per base relation r: entities seen as source / target of r in the test
/// split (restricted to the training vocabulary) and in the training split.
struct RelationTaskSets {
  std::vector<EntityId> test_sources;
  std::vector<EntityId> test_targets;
  std::vector<EntityId> train_sources;
  std::vector<EntityId> train_targets;
};

struct TaskSets {
  std::vector<RelationTaskSets> relations;

  const RelationTaskSets& operator[](RelationId base) const { return relations.at(base); }

  /// Entities whose `r(s, ?)` query appears in the test split, for any r in
  /// R ∪ R^-1: S_r for base r and T_r for an inverse.
  std::span<const EntityId> query_entities(const KnowledgeGraph& g, RelationId r) const {
    const auto& sets = relations.at(g.base_of(r));
    return g.is_inverse(r) ? sets.test_targets : sets.test_sources;
  }
};

inline TaskSets build_task_sets(const KnowledgeGraph& g, std::span<const RawTriple> test) {
  TaskSets tasks;
  tasks.relations.resize(g.num_base_relations());
  for (RelationId r = 0; r < g.num_base_relations(); ++r) {
    auto src = g.sources(r);
    auto dst = g.targets(r);
    tasks.relations[r].train_sources.assign(src.begin(), src.end());
    tasks.relations[r].train_targets.assign(dst.begin(), dst.end());
  }
  for (const auto& t : test) {
    auto r = g.find_relation(t.relation);
    if (!r || g.is_inverse(*r)) continue;
    auto& sets = tasks.relations[*r];
    if (auto s = g.find_entity(t.head)) sets.test_sources.push_back(*s);
    if (auto o = g.find_entity(t.tail)) sets.test_targets.push_back(*o);
  }
  for (auto& sets : tasks.relations) {
    for (auto* v : {&sets.test_sources, &sets.test_targets}) {
      std::sort(v->begin(), v->end());
      v->erase(std::unique(v->begin(), v->end()), v->end());
    }
  }
  return tasks;
}

}  // namespace ruledict
