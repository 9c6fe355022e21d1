#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "ruledict/graph.hpp"
#include "support/oracles.hpp"
#include "support/random_graph.hpp"

using namespace ruledict;
using namespace ruledict::testing;

namespace {

KnowledgeGraph build(std::initializer_list<RawTriple> triples) {
  std::vector<RawTriple> v(triples);
  return KnowledgeGraph::build(v);
}

Path path_of(const KnowledgeGraph& g, std::initializer_list<const char*> names) {
  Path p;
  for (const char* n : names) p.push_back(*g.find_relation(n));
  return p;
}

std::vector<RawTriple> random_train(std::uint64_t seed, std::size_t entities, std::size_t triples,
                                    std::size_t relations = 4) {
  RandomGraphSpec spec;
  spec.entities = entities;
  spec.triples = triples;
  spec.relations = relations;
  return random_dataset(seed, spec).train;
}

}  // namespace

TEST(ParseTriples, ReadsTabSeparatedLines) {
  std::istringstream in("a\tr\tb\r\n\nb\tr2\tc\n");
  auto t = parse_triples(in, "mem");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], (RawTriple{"a", "r", "b"}));
  EXPECT_EQ(t[1], (RawTriple{"b", "r2", "c"}));
}

TEST(ParseTriples, MalformedLineNamesFileAndLine) {
  std::istringstream in("a\tr\tb\na r b\n");
  try {
    parse_triples(in, "train.txt");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("train.txt:2"), std::string::npos);
  }
}

TEST(ParseTriples, RejectsEmptyFieldsAndExtraColumns) {
  std::istringstream empty_field("a\t\tb\n");
  EXPECT_THROW(parse_triples(empty_field, "x"), DataError);
  std::istringstream extra("a\tr\tb\tc\n");
  EXPECT_THROW(parse_triples(extra, "x"), DataError);
}

TEST(KnowledgeGraph, InverseCompletionAndDedup) {
  auto g = build({{"a", "r", "b"}, {"a", "r", "b"}, {"b", "s", "c"}});
  EXPECT_EQ(g.num_entities(), 3u);
  EXPECT_EQ(g.num_base_relations(), 2u);
  EXPECT_EQ(g.num_triples(), 4u);
  const auto r = *g.find_relation("r");
  const auto ri = *g.find_relation("r^-1");
  EXPECT_EQ(g.inverse(r), ri);
  EXPECT_EQ(g.inverse(ri), r);
  EXPECT_TRUE(g.is_inverse(ri));
  EXPECT_EQ(g.relation_name(ri), "r^-1");
  const auto a = *g.find_entity("a"), b = *g.find_entity("b");
  EXPECT_TRUE(g.has_triple(r, a, b));
  EXPECT_TRUE(g.has_triple(ri, b, a));
  EXPECT_FALSE(g.has_triple(r, b, a));
  EXPECT_FALSE(g.find_entity("zzz").has_value());
}

TEST(KnowledgeGraph, GroundingOfEas) {
  auto g = build({{"x1", "win", "grammy"}, {"x2", "win", "grammy"}, {"x1", "nom", "rod"}});
  const auto win = *g.find_relation("win");
  const auto grammy = *g.find_entity("grammy");
  auto gr = g.grounding(Eas{win, grammy});
  ASSERT_EQ(gr.size(), 2u);
  EXPECT_EQ(g.entity_name(gr[0]), "x1");
  EXPECT_EQ(g.entity_name(gr[1]), "x2");
  EXPECT_TRUE(g.grounding(Eas{win, *g.find_entity("rod")}).empty());
}

TEST(KnowledgeGraph, IndexesAgreeWithLinearScanOnRandomGraphs) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto train = random_train(seed, 40, 300);
    auto g = KnowledgeGraph::build(train);
    std::set<std::tuple<RelationId, EntityId, EntityId>> triples;
    for (const auto& t : train) {
      const auto r = *g.find_relation(t.relation);
      const auto s = *g.find_entity(t.head), o = *g.find_entity(t.tail);
      triples.insert({r, s, o});
      triples.insert({g.inverse(r), o, s});
    }
    ASSERT_EQ(g.num_triples(), triples.size());
    // Every stored triple has its inverse; every EAS grounding is a scan.
    for (RelationId r = 0; r < g.num_relations(); ++r) {
      for (const auto& p : g.pairs(r)) {
        EXPECT_TRUE(g.has_triple(g.inverse(r), p.target, p.source));
      }
    }
    for (EasId id = 0; id < g.num_eas(); ++id) {
      const Eas& a = g.eas(id);
      std::vector<EntityId> scan;
      for (auto [r, s, t] : triples) {
        if (r == a.relation && t == a.anchor) scan.push_back(s);
      }
      std::sort(scan.begin(), scan.end());
      auto gr = g.grounding(id);
      EXPECT_EQ(std::vector<EntityId>(gr.begin(), gr.end()), scan);
    }
    // Adjacency holds the same edges.
    std::size_t edges = 0;
    for (EntityId s = 0; s < g.num_entities(); ++s) {
      auto rels = g.out_relations(s);
      auto tgts = g.out_targets(s);
      ASSERT_EQ(rels.size(), tgts.size());
      for (std::size_t i = 0; i < rels.size(); ++i) {
        EXPECT_TRUE(triples.count({rels[i], s, tgts[i]}));
      }
      edges += rels.size();
    }
    EXPECT_EQ(edges, triples.size());
  }
}

TEST(KnowledgeGraph, BuildIsDeterministic) {
  auto train = random_train(3, 30, 150);
  auto g1 = KnowledgeGraph::build(train);
  auto g2 = KnowledgeGraph::build(train);
  ASSERT_EQ(g1.num_eas(), g2.num_eas());
  for (EntityId e = 0; e < g1.num_entities(); ++e) EXPECT_EQ(g1.entity_name(e), g2.entity_name(e));
  for (EasId id = 0; id < g1.num_eas(); ++id) EXPECT_EQ(g1.eas(id), g2.eas(id));
}

TEST(ConnectionSet, ContainsEasWithSharedGrounding) {
  auto g = build({{"a", "r", "c"}, {"a", "r2", "d"}, {"lonely", "r", "e"}});
  const auto a_eas = *g.find_eas({*g.find_relation("r"), *g.find_entity("c")});
  const auto b_eas = *g.find_eas({*g.find_relation("r2"), *g.find_entity("d")});
  auto c = connection_set(g, a_eas);
  EXPECT_TRUE(std::binary_search(c.begin(), c.end(), b_eas));
  const auto isolated = *g.find_eas({*g.find_relation("r"), *g.find_entity("e")});
  EXPECT_TRUE(connection_set(g, isolated).empty());
}

TEST(ConnectionSet, MembershipIsSymmetric) {
  auto g = KnowledgeGraph::build(random_train(11, 30, 120));
  std::vector<std::vector<EasId>> sets(g.num_eas());
  for (EasId a = 0; a < g.num_eas(); ++a) sets[a] = connection_set(g, a);
  for (EasId a = 0; a < g.num_eas(); ++a) {
    for (EasId b : sets[a]) {
      EXPECT_TRUE(std::binary_search(sets[b].begin(), sets[b].end(), a));
    }
  }
}

TEST(CandidatePaths, PrunesByIntermediateEntities) {
  auto g = build({{"a", "r1", "b"}, {"b", "r2", "c"}});
  auto paths = enumerate_candidate_paths(g, 2);
  auto has = [&](std::initializer_list<const char*> names) {
    return std::find(paths.begin(), paths.end(), path_of(g, names)) != paths.end();
  };
  EXPECT_TRUE(has({"r1"}));
  EXPECT_TRUE(has({"r2"}));
  EXPECT_TRUE(has({"r1", "r2"}));
  EXPECT_FALSE(has({"r2", "r1"}));
  EXPECT_TRUE(std::is_sorted(paths.begin(), paths.end()));
  EXPECT_EQ(enumerate_candidate_paths(g, 1).size(), g.num_relations());
  EXPECT_THROW(enumerate_candidate_paths(g, 4), std::invalid_argument);
  EXPECT_THROW(enumerate_candidate_paths(g, 0), std::invalid_argument);
}

TEST(CandidatePaths, MatchInstantiatedWalksUpToLengthTwo) {
  auto train = random_train(21, 20, 60);
  auto g = KnowledgeGraph::build(train);
  OracleGraph o(train);
  auto paths = enumerate_candidate_paths(g, 3);
  std::set<Path> pruned(paths.begin(), paths.end());
  auto to_oracle = [&](RelationId r) {
    const bool inv = g.is_inverse(r);
    const int base = o.find_relation(g.relation_name(g.base_of(r)));
    return inv ? o.inverse(base) : base;
  };
  for (RelationId a = 0; a < g.num_relations(); ++a) {
    for (RelationId b = 0; b < g.num_relations(); ++b) {
      Path p;
      p.push_back(a);
      p.push_back(b);
      const bool instantiated = count(multiply(o.M[to_oracle(a)], o.M[to_oracle(b)])) > 0;
      EXPECT_EQ(pruned.count(p) == 1, instantiated);
      for (RelationId c = 0; c < g.num_relations(); ++c) {
        Path q = p;
        q.push_back(c);
        const bool inst3 =
            count(multiply(multiply(o.M[to_oracle(a)], o.M[to_oracle(b)]), o.M[to_oracle(c)])) > 0;
        if (inst3) {
          EXPECT_TRUE(pruned.count(q)) << "pruning dropped an instantiated path";
        }
      }
    }
  }
}

TEST(PathPairs, Examples) {
  auto g = build({{"a", "r1", "b"}, {"b", "r2", "c"}});
  auto p = path_pairs(g, path_of(g, {"r1", "r2"}), 100);
  ASSERT_TRUE(p);
  ASSERT_EQ(p->size(), 1u);
  EXPECT_EQ((*p)[0], (EntityPair{*g.find_entity("a"), *g.find_entity("c")}));
  const auto r1 = *g.find_relation("r1");
  auto single = path_pairs(g, path_of(g, {"r1"}), 100);
  EXPECT_TRUE(std::ranges::equal(*single, g.pairs(r1)));
}

TEST(PathPairs, OverflowAboveCap) {
  std::vector<RawTriple> t;
  for (int i = 0; i < 10; ++i) {
    t.push_back({"s" + std::to_string(i), "r", "hub"});
    t.push_back({"hub", "q", "t" + std::to_string(i)});
  }
  auto g = KnowledgeGraph::build(t);
  EXPECT_FALSE(path_pairs(g, path_of(g, {"r", "q"}), 50).has_value());
  auto ok = path_pairs(g, path_of(g, {"r", "q"}), 100);
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->size(), 100u);
}

TEST(PathPairs, MatchWalkOracleAndPathExistence) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto train = random_train(seed * 7, 30, 90, 3);
    auto g = KnowledgeGraph::build(train);
    OracleGraph o(train);
    std::map<std::string, int> oracle_rel;
    for (int r = 0; r < 2 * o.R; ++r) oracle_rel[o.relation_name(r)] = r;
    for (const Path& p : enumerate_candidate_paths(g, 3)) {
      Matrix m = o.M[oracle_rel[g.relation_name(p[0])]];
      for (std::size_t i = 1; i < p.size(); ++i) {
        m = multiply(m, o.M[oracle_rel[g.relation_name(p[i])]]);
      }
      auto pairs = path_pairs(g, p, 1'000'000);
      ASSERT_TRUE(pairs);
      std::set<std::pair<std::string, std::string>> got, want;
      for (const auto& e : *pairs) got.insert({g.entity_name(e.source), g.entity_name(e.target)});
      for (int s = 0; s < o.N; ++s) {
        for (int t = 0; t < o.N; ++t) {
          if (m[s][t]) want.insert({o.entities[s], o.entities[t]});
        }
      }
      ASSERT_EQ(got, want);
      // path_exists_between agrees with membership for every pair.
      for (EntityId s = 0; s < g.num_entities(); ++s) {
        for (EntityId t = 0; t < g.num_entities(); ++t) {
          const bool member = std::binary_search(pairs->begin(), pairs->end(), EntityPair{s, t});
          ASSERT_EQ(path_exists_between(g, s, t, p), member);
        }
        // Frontier expansion gives the same targets.
        auto targets = path_targets(g, s, p);
        std::size_t expected = 0;
        for (const auto& e : *pairs) expected += e.source == s;
        ASSERT_EQ(targets.size(), expected);
      }
      // Reversal swaps the pairs.
      auto rev = path_pairs(g, reversed(g, p), 1'000'000);
      std::set<std::pair<EntityId, EntityId>> a, b;
      for (const auto& e : *pairs) a.insert({e.target, e.source});
      for (const auto& e : *rev) b.insert({e.source, e.target});
      ASSERT_EQ(a, b);
    }
  }
}

TEST(JoinPairs, IsAssociative) {
  auto train = random_train(5, 25, 100, 3);
  auto g = KnowledgeGraph::build(train);
  for (RelationId a = 0; a < g.num_relations(); ++a) {
    for (RelationId b = 0; b < g.num_relations(); ++b) {
      for (RelationId c = 0; c < g.num_relations(); c += 2) {
        auto left = join_pairs(join_pairs(g.pairs(a), g.pairs(b)), g.pairs(c));
        auto right = join_pairs(g.pairs(a), join_pairs(g.pairs(b), g.pairs(c)));
        ASSERT_EQ(left, right);
      }
    }
  }
}

TEST(PathExists, DirectionMatters) {
  auto g = build({{"a", "r1", "b"}, {"b", "r2", "c"}});
  const auto a = *g.find_entity("a"), c = *g.find_entity("c");
  const auto p = path_of(g, {"r1", "r2"});
  EXPECT_TRUE(path_exists_between(g, a, c, p));
  EXPECT_FALSE(path_exists_between(g, c, a, p));
}
