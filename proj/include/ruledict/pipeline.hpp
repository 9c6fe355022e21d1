#pragma once

// Mining and evaluation driven by a Config.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ruledict/config.hpp"
#include "ruledict/dataset.hpp"
#include "ruledict/eval.hpp"
#include "ruledict/graph.hpp"
#include "ruledict/mine_bisear.hpp"
#include "ruledict/mine_car.hpp"
#include "ruledict/mine_ear.hpp"
#include "ruledict/mine_rofr.hpp"
#include "ruledict/rules.hpp"
#include "ruledict/task_sets.hpp"

namespace ruledict {

struct RuleTypes {
  bool ear = false;
  bool car = false;
  bool bisear = false;
  bool rofr = false;

  static RuleTypes all() { return {true, true, true, true}; }

  /// Comma-separated subset of ear, car, bisear, rofr, or "all".
  static RuleTypes parse(std::string_view list) {
    RuleTypes t;
    while (!list.empty()) {
      const auto comma = list.find(',');
      const auto item = detail::trim(list.substr(0, comma));
      if (item == "all") {
        t = all();
      } else if (item == "ear") {
        t.ear = true;
      } else if (item == "car") {
        t.car = true;
      } else if (item == "bisear") {
        t.bisear = true;
      } else if (item == "rofr") {
        t.rofr = true;
      } else {
        throw ConfigError("unknown rule type '" + std::string(item) + "'");
      }
      if (comma == std::string_view::npos) break;
      list.remove_prefix(comma + 1);
    }
    return t;
  }
};

struct MiningSummary {
  std::size_t ear = 0;
  std::size_t car = 0;
  std::size_t bisear = 0;
  std::size_t eear = 0;
  std::vector<Path> car_overflowed;
  std::uint64_t bisear_skipped = 0;
};

/// Mines the requested rule types in dependency order. RofR is derived
/// from the EAR rules, so it requires ear.
inline RuleStore mine_rules(const KnowledgeGraph& g, std::span<const RawTriple> test,
                            const Config& cfg, const RuleTypes& types,
                            MiningSummary* summary = nullptr) {
  if (types.rofr && !types.ear) throw ConfigError("rule type rofr requires ear");
  const unsigned threads = resolve_threads(cfg.threads);
  const TaskSets tasks = build_task_sets(g, test);
  RuleStore store;
  MiningSummary local;
  MiningSummary& s = summary ? *summary : local;

  std::vector<EarRule> ears;
  if (types.ear) {
    ears = mine_ear(g, {cfg.test(), cfg.min_body_support, threads});
    store.insert_all(ears);
    s.ear = store.ear_count();
  }
  if (types.car) {
    auto res = mine_car(g, tasks, {cfg.test(), cfg.max_path_len, cfg.path_pair_cap, threads});
    store.insert_all(res.rules);
    s.car = store.car_count();
    s.car_overflowed = std::move(res.overflowed);
  }
  if (types.bisear) {
    auto res = mine_bisear(g, tasks, {cfg.test(), cfg.bisear_pair_cap, threads});
    store.insert_all(res.rules);
    s.bisear = store.bisear_count();
    s.bisear_skipped = res.skipped_pairs;
  }
  if (types.rofr) {
    const RuleGraph rg = build_rule_graph(ears, cfg.rofr_include_repels);
    const RofrOptions opts{cfg.test(), cfg.alpha, threads};
    std::vector<EearRule> eears;
    if (cfg.rofr_mode == RofrMode::task) {
      eears = task_specific_rofr(g, tasks, store, rg, opts);
    } else {
      eears = derive_eear(mine_rear(rg, g.num_entities(), opts.test, threads), rg, store,
                          cfg.alpha);
    }
    store.insert_all(eears);
    s.eear = store.eear_count();
  }
  return store;
}

struct EvalRun {
  EvalReport report;
  PairFilteringCheck detection;
  bool detection_ran = false;
  std::vector<RawTriple> test;
};

/// Pair-filtering detection (unless forced on/off), then filtered ranking
/// of every `stride`-th test triple.
inline EvalRun run_evaluation(const KnowledgeGraph& g, const RuleStore& store, const Dataset& d,
                              const Config& cfg, std::size_t stride = 1) {
  EvalRun run;
  bool active = cfg.filtering == FilteringMode::on;
  if (cfg.filtering == FilteringMode::automatic) {
    const auto train = training_pairs(g);
    const auto valid = directed_pairs(g, d.valid);
    run.detection = detect_pair_filtering(train, valid, g.num_entities(), cfg.test());
    run.detection_ran = true;
    active = run.detection.pairs_removed;
  }
  const Scorer scorer(g, store, {cfg.score_slots, active, cfg.include_repel_scores});
  KnownTriples known;
  known.add_all(g, d.train);
  known.add_all(g, d.valid);
  known.add_all(g, d.test);
  known.finalize();
  run.test = subsample(d.test, stride);
  run.report = evaluate(scorer, run.test, known, resolve_threads(cfg.threads));
  return run;
}

inline nlohmann::ordered_json metrics_json(const Metrics& m) {
  return {{"mrr", m.mrr},
          {"hits1", m.hits1},
          {"hits3", m.hits3},
          {"hits10", m.hits10},
          {"count", m.count}};
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// report.json content. `generated_at` is the only run-dependent field.
inline nlohmann::ordered_json report_json(const EvalRun& run, const Config& cfg,
                                          std::size_t stride,
                                          std::string generated_at = utc_timestamp()) {
  using json = nlohmann::ordered_json;
  const auto& r = run.report;
  json filtering = {{"mode", std::string(to_string(cfg.filtering))},
                    {"active", r.filtering_active}};
  if (run.detection_ran) {
    filtering["detection"] = {{"train_pairs", run.detection.n},
                              {"valid_pairs", run.detection.m},
                              {"overlap", run.detection.k},
                              {"k0", run.detection.interval.k0},
                              {"k1", run.detection.interval.k1},
                              {"pairs_removed", run.detection.pairs_removed}};
  }
  json per_relation = json::object();
  for (const auto& [rel, m] : r.per_relation) per_relation[rel] = metrics_json(m);
  return {{"metrics", metrics_json(r.overall)},
          {"head_prediction", metrics_json(r.head)},
          {"tail_prediction", metrics_json(r.tail)},
          {"n_test", r.n_test},
          {"n_unresolvable", r.n_unresolvable},
          {"test_stride", stride},
          {"filtering", filtering},
          {"config", to_json(cfg)},
          {"per_relation", per_relation},
          {"generated_at", generated_at}};
}

/// One line per test triple and direction: head, relation, tail,
/// direction, rank, top score of the true triple.
inline void write_ranks_tsv(const EvalRun& run, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "head\trelation\ttail\tdirection\trank\ttop_score\n";
  char score[32];
  for (const auto& rec : run.report.ranks) {
    const auto& t = run.test[rec.test_index];
    std::snprintf(score, sizeof score, "%.17g", rec.top_score);
    out << t.head << '\t' << t.relation << '\t' << t.tail << '\t' << to_string(rec.direction)
        << '\t' << rec.rank << '\t' << score << '\n';
  }
}

}  // namespace ruledict
