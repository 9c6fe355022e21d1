#include <gtest/gtest.h>

#include <random>

#include "ruledict/eval.hpp"
#include "ruledict/pipeline.hpp"
#include "support/random_graph.hpp"

using namespace ruledict;
using namespace ruledict::testing;

namespace {

/// Rank of the true answer by sorting every candidate vector.
std::uint64_t sort_oracle_rank(const std::vector<ScoreVector>& vectors, std::size_t answer,
                               const std::vector<bool>& excluded) {
  std::vector<std::pair<ScoreVector, bool>> cands;
  for (std::size_t c = 0; c < vectors.size(); ++c) {
    if (c == answer || !excluded[c]) cands.push_back({vectors[c], c == answer});
  }
  std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::size_t first_equal = 0;
  while (cands[first_equal].first != vectors[answer]) ++first_equal;
  std::size_t equal_others = 0;
  for (const auto& [v, is_true] : cands) equal_others += (!is_true && v == vectors[answer]);
  return 1 + first_equal + (equal_others + 1) / 2;
}

RuleStore mine_all(const KnowledgeGraph& g, std::span<const RawTriple> test) {
  Config cfg;
  cfg.threads = 2;
  return mine_rules(g, test, cfg, RuleTypes::all());
}

}  // namespace

TEST(ScoreVector, SortedTruncatedAndPadded) {
  EXPECT_EQ(make_score_vector({0.2, 0.9, 0.5}, 4), (ScoreVector{0.9, 0.5, 0.2, 0.0}));
  EXPECT_EQ(make_score_vector({0.1, 0.2, 0.3, 0.4}, 2), (ScoreVector{0.4, 0.3}));
  EXPECT_EQ(make_score_vector({}, 3), (ScoreVector{0, 0, 0}));
  // Lexicographic: a stronger second slot wins over more weak rules.
  EXPECT_GT(make_score_vector({0.9, 0.8}), make_score_vector({0.9, 0.7, 0.7, 0.7}));
}

TEST(MeanRank, TieHandling) {
  EXPECT_EQ(mean_rank(0, 0), 1u);
  EXPECT_EQ(mean_rank(0, 9), 6u);
  EXPECT_EQ(mean_rank(3, 2), 5u);
}

TEST(RankCandidates, MatchesSortOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t N = 1 + rng() % 40;
    const std::size_t slots = 1 + rng() % 4;
    CandidateScores scores;
    scores.reset(N);
    std::vector<std::vector<double>> raw(N);
    std::uniform_int_distribution<int> level(0, 3);
    for (std::size_t c = 0; c < N; ++c) {
      const int rules = static_cast<int>(rng() % 5);
      for (int i = 0; i < rules; ++i) {
        // Few distinct values so ties are common.
        const double p = level(rng) / 4.0;
        raw[c].push_back(p);
        scores.add(static_cast<EntityId>(c), p);
      }
    }
    scores.finish(slots);
    std::vector<ScoreVector> vectors(N);
    for (std::size_t c = 0; c < N; ++c) vectors[c] = make_score_vector(raw[c], slots);
    const std::size_t answer = rng() % N;
    std::vector<bool> excluded(N, false);
    std::vector<EntityId> filtered;
    for (std::size_t c = 0; c < N; ++c) {
      if (rng() % 4 == 0) {
        excluded[c] = true;
        filtered.push_back(static_cast<EntityId>(c));
      }
    }
    const auto res = rank_candidates(scores, N, static_cast<EntityId>(answer), filtered);
    ASSERT_EQ(res.rank, sort_oracle_rank(vectors, answer, excluded)) << "trial " << trial;
    // Enumeration order does not matter: reversing ids gives the same rank.
    CandidateScores rev;
    rev.reset(N);
    for (std::size_t c = N; c-- > 0;) {
      for (double p : raw[c]) rev.add(static_cast<EntityId>(c), p);
    }
    rev.finish(slots);
    ASSERT_EQ(rank_candidates(rev, N, static_cast<EntityId>(answer), filtered).rank, res.rank);
  }
}

TEST(RankCandidates, AllZeroTiesWithNineOthers) {
  CandidateScores scores;
  scores.reset(10);
  scores.finish(10);
  EXPECT_EQ(rank_candidates(scores, 10, EntityId{0}, {}).rank, 6u);
  // Filtering a known answer removes it from the tie.
  const std::vector<EntityId> filtered = {3, 4};
  EXPECT_EQ(rank_candidates(scores, 10, EntityId{0}, filtered).rank, 5u);
}

TEST(Metrics, DirectFormulas) {
  MetricsAccumulator acc;
  acc.add(1);
  acc.add(4);
  const auto m = acc.finish();
  EXPECT_DOUBLE_EQ(m.mrr, 0.625);
  EXPECT_DOUBLE_EQ(m.hits1, 50.0);
  EXPECT_DOUBLE_EQ(m.hits3, 50.0);
  EXPECT_DOUBLE_EQ(m.hits10, 100.0);
}

TEST(Evaluate, SingleTripleRankedFirstBothWays) {
  // r(X, b) <- q(X, c) promotes; the test triple r(a, b) is the only one
  // with any evidence in either direction.
  std::vector<RawTriple> train;
  for (int i = 0; i < 6; ++i) {
    train.push_back({"x" + std::to_string(i), "r", "b"});
    train.push_back({"x" + std::to_string(i), "q", "c"});
  }
  train.push_back({"a", "q", "c"});
  for (int i = 0; i < 40; ++i) {
    train.push_back({"f" + std::to_string(i), "s", "f" + std::to_string(i + 1)});
  }
  const std::vector<RawTriple> test = {{"a", "r", "b"}};
  const auto g = KnowledgeGraph::build(train);
  RuleStore store;
  store.insert_all(mine_ear(g));
  const Scorer scorer(g, store);
  KnownTriples known;
  known.add_all(g, train);
  known.add_all(g, test);
  known.finalize();
  const auto report = evaluate(scorer, test, known);
  EXPECT_EQ(report.n_test, 1u);
  EXPECT_EQ(report.tail.mrr, 1.0);
  EXPECT_EQ(report.head.count, 1u);
  EXPECT_GT(report.head.mrr, 0.0);
  EXPECT_LE(report.overall.hits1, report.overall.hits3);
}

TEST(Evaluate, UnresolvableTriplesTieWithEveryCandidate) {
  std::vector<RawTriple> train = {{"a", "r", "b"}, {"b", "r", "c"}, {"c", "r", "d"}};
  const auto g = KnowledgeGraph::build(train);
  RuleStore store;
  const Scorer scorer(g, store);
  KnownTriples known;
  known.add_all(g, train);
  known.finalize();
  const std::vector<RawTriple> test = {{"a", "r", "unseen"}, {"a", "nope", "b"}};
  const auto report = evaluate(scorer, test, known);
  EXPECT_EQ(report.n_unresolvable, 2u);
  EXPECT_EQ(report.ranks.size(), 4u);
  for (const auto& rec : report.ranks) EXPECT_FALSE(rec.resolvable);
  EXPECT_GT(report.overall.mrr, 0.0);
}

TEST(Scorer, CandidateScoresAgreeWithScoreTriple) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    RandomGraphSpec spec;
    spec.entities = 30;
    spec.relations = 3;
    spec.triples = 160;
    spec.hub_share = 0.5;
    const auto data = random_dataset(seed, spec);
    const auto g = KnowledgeGraph::build(data.train);
    const auto store = mine_all(g, data.test);
    ASSERT_GT(store.ear_count(), 0u);
    for (bool filtering : {false, true}) {
      for (bool repels : {true, false}) {
        const Scorer scorer(g, store, {10, filtering, repels});
        CandidateScores scores;
        for (RelationId r = 0; r < g.num_relations(); ++r) {
          for (EntityId known = 0; known < g.num_entities(); known += 3) {
            for (Direction d : {Direction::head, Direction::tail}) {
              scorer.score_candidates(r, known, d, scores);
              for (EntityId c = 0; c < g.num_entities(); ++c) {
                const EntityId s = d == Direction::tail ? known : c;
                const EntityId t = d == Direction::tail ? c : known;
                ASSERT_EQ(scores.vector_of(c), scorer.score_triple(r, s, t, d))
                    << "r=" << g.relation_name(r) << " s=" << s << " t=" << t
                    << " dir=" << to_string(d);
              }
            }
          }
        }
      }
    }
  }
}

TEST(Scorer, InverseQueryMatchesBaseQuery) {
  RandomGraphSpec spec;
  spec.entities = 25;
  spec.triples = 120;
  const auto data = random_dataset(4, spec);
  const auto g = KnowledgeGraph::build(data.train);
  const auto store = mine_all(g, data.test);
  const Scorer scorer(g, store);
  for (RelationId r = 0; r < g.num_base_relations(); ++r) {
    for (EntityId s = 0; s < g.num_entities(); ++s) {
      for (EntityId t = 0; t < g.num_entities(); t += 2) {
        ASSERT_EQ(scorer.score_triple(r, s, t, Direction::tail),
                  scorer.score_triple(g.inverse(r), t, s, Direction::head));
      }
    }
  }
}

TEST(Evaluate, MetricBoundsAndThreadIndependence) {
  RandomGraphSpec spec;
  spec.entities = 40;
  spec.triples = 200;
  spec.test_triples = 25;
  const auto data = random_dataset(12, spec);
  const auto g = KnowledgeGraph::build(data.train);
  const auto store = mine_all(g, data.test);
  const Scorer scorer(g, store);
  KnownTriples known;
  known.add_all(g, data.train);
  known.add_all(g, data.test);
  known.finalize();
  const auto a = evaluate(scorer, data.test, known, 1);
  const auto b = evaluate(scorer, data.test, known, 4);
  EXPECT_EQ(a.overall.mrr, b.overall.mrr);
  for (const auto* m : {&a.overall, &a.head, &a.tail}) {
    EXPECT_GT(m->mrr, 0.0);
    EXPECT_LE(m->mrr, 1.0);
    EXPECT_LE(m->hits1, m->hits3);
    EXPECT_LE(m->hits3, m->hits10);
    EXPECT_LE(m->hits10, 100.0);
  }
  ASSERT_EQ(a.ranks.size(), b.ranks.size());
  for (std::size_t i = 0; i < a.ranks.size(); ++i) EXPECT_EQ(a.ranks[i].rank, b.ranks[i].rank);
}

TEST(Evaluate, KnownTriplesDoNotInfluenceRank) {
  // Candidates b and c carry identical evidence; c is a known answer of the
  // same query and must be filtered out.
  std::vector<RawTriple> train;
  for (int i = 0; i < 8; ++i) {
    train.push_back({"x" + std::to_string(i), "q", "hub"});
    train.push_back({"x" + std::to_string(i), "r", "b"});
    train.push_back({"x" + std::to_string(i), "r", "c"});
  }
  train.push_back({"a", "q", "hub"});
  train.push_back({"a", "r", "c"});
  for (int i = 0; i < 60; ++i) {
    train.push_back({"f" + std::to_string(i), "s", "f" + std::to_string(i + 1)});
  }
  const auto g = KnowledgeGraph::build(train);
  RuleStore store;
  store.insert_all(mine_ear(g));
  const Scorer scorer(g, store);
  KnownTriples known;
  known.add_all(g, train);
  const std::vector<RawTriple> test = {{"a", "r", "b"}};
  known.add_all(g, test);
  known.finalize();
  const auto report = evaluate(scorer, test, known);
  EXPECT_EQ(report.ranks[1].direction, Direction::tail);
  EXPECT_EQ(report.ranks[1].rank, 1u);
}

TEST(PairFiltering, DetectsRemovedPairs) {
  std::mt19937_64 rng(5);
  const std::size_t N = 300;
  std::set<EntityPair> train_set;
  while (train_set.size() < 20000) {
    train_set.insert({static_cast<EntityId>(rng() % N), static_cast<EntityId>(rng() % N)});
  }
  std::vector<EntityPair> train(train_set.begin(), train_set.end());
  std::vector<EntityPair> random_valid, filtered_valid;
  while (random_valid.size() < 500) {
    EntityPair p{static_cast<EntityId>(rng() % N), static_cast<EntityId>(rng() % N)};
    random_valid.push_back(p);
    if (!train_set.count(p)) filtered_valid.push_back(p);
  }
  for (auto* v : {&random_valid, &filtered_valid}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  const auto kept = detect_pair_filtering(train, random_valid, N);
  EXPECT_FALSE(kept.pairs_removed);
  EXPECT_GT(kept.k, 0u);
  const auto removed = detect_pair_filtering(train, filtered_valid, N);
  EXPECT_TRUE(removed.pairs_removed);
  EXPECT_EQ(removed.k, 0u);
}

TEST(PairFiltering, ZeroesLinkedPairsAtScoreTime) {
  std::vector<RawTriple> train;
  for (int i = 0; i < 6; ++i) {
    train.push_back({"x" + std::to_string(i), "r", "b"});
    train.push_back({"x" + std::to_string(i), "q", "c"});
  }
  train.push_back({"a", "q", "c"});
  train.push_back({"a", "s", "b"});
  for (int i = 0; i < 40; ++i) {
    train.push_back({"f" + std::to_string(i), "s", "f" + std::to_string(i + 1)});
  }
  const auto g = KnowledgeGraph::build(train);
  RuleStore store;
  store.insert_all(mine_ear(g));
  const auto r = *g.find_relation("r");
  const auto a = *g.find_entity("a"), b = *g.find_entity("b");
  const Scorer plain(g, store, {10, false, true});
  const Scorer filtered(g, store, {10, true, true});
  EXPECT_GT(plain.score_triple(r, a, b, Direction::tail)[0], 0.0);
  EXPECT_EQ(filtered.score_triple(r, a, b, Direction::tail), ScoreVector(10, 0.0));
}
