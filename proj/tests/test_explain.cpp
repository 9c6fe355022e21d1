#include <gtest/gtest.h>

#include "ruledict/explain.hpp"
#include "ruledict/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/random_graph.hpp"

using namespace ruledict;
using namespace ruledict::testing;

TEST(Explain, GrammyTriple) {
  const auto train = grammy_fixture();
  const auto g = KnowledgeGraph::build(train);
  RuleStore store;
  store.insert_all(mine_ear(g));
  const Scorer scorer(g, store);
  // Nominee_a is a co-nominee of Rodney Jerkins but not a known winner.
  const auto res = explain_triple(scorer, "win", "nominee_a", "52nd_Grammy_Award", 5);
  ASSERT_TRUE(res.resolvable);
  ASSERT_FALSE(res.items.empty());
  EXPECT_EQ(res.items[0].fired.kind(), RuleKind::ear);
  EXPECT_DOUBLE_EQ(res.items[0].probability, 4.0 / 6.0);
  EXPECT_EQ(res.items[0].rendered,
            "P=4/6 (0.67): win(X, 52nd_Grammy_Award) ⟵ co_nominee_of(X, Rodney_Jerkins), "
            "grounded at nominee_a");
}

TEST(Explain, NoFiringRulesGivesEmptyList) {
  const auto train = grammy_fixture();
  const auto g = KnowledgeGraph::build(train);
  RuleStore store;
  store.insert_all(mine_ear(g));
  const Scorer scorer(g, store);
  const auto res = explain_triple(scorer, "next", "filler_3", "filler_900", 5);
  EXPECT_TRUE(res.resolvable);
  EXPECT_TRUE(res.items.empty());
  EXPECT_FALSE(res.note.empty());
}

TEST(Explain, UnknownNamesAreUnresolvable) {
  const auto g = KnowledgeGraph::build(grammy_fixture());
  RuleStore store;
  const Scorer scorer(g, store);
  const auto res = explain_triple(scorer, "win", "Nobody", "52nd_Grammy_Award", 5);
  EXPECT_FALSE(res.resolvable);
  EXPECT_TRUE(res.items.empty());
  EXPECT_NE(res.note.find("unresolvable"), std::string::npos);
  EXPECT_NE(res.note.find("Nobody"), std::string::npos);
  EXPECT_EQ(to_json(res)["resolvable"], false);
}

TEST(Explain, ProbabilitiesEqualScoreVector) {
  RandomGraphSpec spec;
  spec.entities = 30;
  spec.triples = 160;
  spec.hub_share = 0.5;
  const auto data = random_dataset(2, spec);
  const auto g = KnowledgeGraph::build(data.train);
  Config cfg;
  const auto store = mine_rules(g, data.test, cfg, RuleTypes::all());
  const Scorer scorer(g, store);
  std::size_t nonempty = 0;
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    for (EntityId s = 0; s < g.num_entities(); s += 2) {
      for (EntityId t = 0; t < g.num_entities(); t += 3) {
        for (Direction d : {Direction::head, Direction::tail}) {
          const auto res = explain_triple(scorer, r, s, t, 10, d);
          auto vec = scorer.score_triple(r, s, t, d);
          std::vector<double> probs;
          for (const auto& item : res.items) probs.push_back(item.probability);
          std::vector<double> leading(vec.begin(), vec.begin() + static_cast<std::ptrdiff_t>(probs.size()));
          ASSERT_EQ(probs, leading);
          for (std::size_t i = probs.size(); i < vec.size(); ++i) ASSERT_EQ(vec[i], 0.0);
          nonempty += !probs.empty();
        }
      }
    }
  }
  EXPECT_GT(nonempty, 0u);
}

TEST(Explain, TopKLimitsOutput) {
  const auto d = load_dataset(RULEDICT_TOY_DATA);
  const auto g = KnowledgeGraph::build(d.train);
  Config cfg;
  const auto store = mine_rules(g, d.test, cfg, RuleTypes::all());
  const Scorer scorer(g, store);
  const auto& t = d.test.front();
  const auto all = explain_triple(scorer, t.relation, t.head, t.tail, 1000);
  ASSERT_GT(all.items.size(), 3u);
  const auto top = explain_triple(scorer, t.relation, t.head, t.tail, 3);
  ASSERT_EQ(top.items.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(top.items[i].rendered, all.items[i].rendered);
  for (std::size_t i = 1; i < all.items.size(); ++i) {
    EXPECT_GE(all.items[i - 1].probability, all.items[i].probability);
  }
}

TEST(Explain, FreebaseNamesAbbreviatedWithLegend) {
  EXPECT_EQ(NameAbbreviator::abbreviate("/people/person/nationality"), "person/nationality");
  EXPECT_EQ(NameAbbreviator::abbreviate("/film/film/genre"), "film/genre");
  EXPECT_EQ(NameAbbreviator::abbreviate("_hypernym"), "_hypernym");
  EXPECT_EQ(NameAbbreviator::abbreviate("/a/b"), "/a/b");

  std::vector<RawTriple> train;
  for (int i = 0; i < 5; ++i) {
    const auto x = "/m/x" + std::to_string(i);
    train.push_back({x, "/people/person/nationality", "/m/usa"});
    train.push_back({x, "/people/person/place_of_birth", "/m/nyc"});
  }
  train.push_back({"/m/y", "/people/person/place_of_birth", "/m/nyc"});
  for (int i = 0; i < 40; ++i) {
    train.push_back({"/m/f" + std::to_string(i), "/base/chain/next", "/m/f" + std::to_string(i + 1)});
  }
  const auto g = KnowledgeGraph::build(train);
  RuleStore store;
  store.insert_all(mine_ear(g));
  const Scorer scorer(g, store);
  const auto res = explain_triple(scorer, "/people/person/nationality", "/m/y", "/m/usa", 3);
  ASSERT_FALSE(res.items.empty());
  EXPECT_NE(res.items[0].rendered.find("person/nationality(X, /m/usa)"), std::string::npos);
  EXPECT_EQ(res.legend.at("person/nationality"), "/people/person/nationality");
  EXPECT_NE(render_text(res).find("where"), std::string::npos);
}
