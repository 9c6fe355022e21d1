// ruledict: mine rules from a knowledge graph, evaluate link prediction and
// explain individual triples.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ruledict/ruledict.hpp"

namespace fs = std::filesystem;
using namespace ruledict;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct CommonArgs {
  std::string data_dir;
  std::string config_file;
  std::vector<std::string> overrides;
  int threads = -1;

  Config config() const {
    Config cfg;
    if (!config_file.empty()) cfg = load_config(config_file);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (threads >= 0) cfg.threads = static_cast<unsigned>(threads);
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-d,--data", args.data_dir, "Dataset directory (train.txt, valid.txt, test.txt)")
      ->required();
  cmd->add_option("-c,--config", args.config_file, "Config file of key = value lines");
  cmd->add_option("--set", args.overrides, "Config override key=value (repeatable)");
  cmd->add_option("-j,--threads", args.threads, "Worker threads (0 = all cores)");
}

void log(const std::string& msg) { std::cerr << "[ruledict] " << msg << "\n"; }

int cmd_ingest(const CommonArgs& args, bool as_json) {
  const Dataset d = load_dataset(args.data_dir);
  const auto g = KnowledgeGraph::build(d.train);
  auto fp = fingerprint(d, g);
  auto count_unresolvable = [&](const std::vector<RawTriple>& split) {
    std::size_t n = 0;
    for (const auto& t : split) {
      n += !(g.find_entity(t.head) && g.find_entity(t.tail) && g.find_relation(t.relation));
    }
    return n;
  };
  fp["unresolvable_valid"] = count_unresolvable(d.valid);
  fp["unresolvable_test"] = count_unresolvable(d.test);
  if (as_json) {
    std::cout << fp.dump(2) << "\n";
    return 0;
  }
  std::cout << "entities        " << g.num_entities() << "\n"
            << "base relations  " << g.num_base_relations() << "\n"
            << "train triples   " << d.train.size() << " (" << g.num_triples() / 2
            << " distinct)\n"
            << "valid triples   " << d.valid.size() << "\n"
            << "test triples    " << d.test.size() << "\n"
            << "unresolvable    valid " << fp["unresolvable_valid"].get<std::size_t>()
            << ", test " << fp["unresolvable_test"].get<std::size_t>() << "\n";
  for (const auto& f : fp["files"]) {
    std::cout << f["name"].get<std::string>() << "  " << f["bytes"].get<std::uint64_t>()
              << " bytes  sha256 " << f["sha256"].get<std::string>() << "\n";
  }
  return 0;
}

int cmd_mine(const CommonArgs& args, const std::string& out_dir, const std::string& types_arg) {
  const Config cfg = args.config();
  const RuleTypes types = RuleTypes::parse(types_arg);
  if (types.rofr && !types.ear) throw ConfigError("rule type rofr requires ear");
  const Dataset d = load_dataset(args.data_dir);
  const auto g = KnowledgeGraph::build(d.train);
  log("graph: " + std::to_string(g.num_entities()) + " entities, " +
      std::to_string(g.num_base_relations()) + " relations, " + std::to_string(g.num_eas()) +
      " EASs");
  MiningSummary summary;
  const RuleStore store = mine_rules(g, d.test, cfg, types, &summary);
  save_store(store, g, out_dir, fingerprint(d, g), to_json(cfg));
  std::cout << "EAR " << summary.ear << "\nCAR " << summary.car << "\nbisEAR "
            << summary.bisear << "\nEEAR " << summary.eear << "\n";
  if (!summary.car_overflowed.empty()) {
    log(std::to_string(summary.car_overflowed.size()) +
        " paths skipped: connected pairs above path_pair_cap");
  }
  if (summary.bisear_skipped > 0) {
    log(std::to_string(summary.bisear_skipped) +
        " bisEAR body pairs skipped: m1*m2 above bisear_pair_cap");
  }
  return 0;
}

std::size_t stride_for(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("--test-fraction must be in (0, 1]");
  return static_cast<std::size_t>(std::llround(1.0 / fraction));
}

int cmd_eval(const CommonArgs& args, const std::string& rules_dir, const std::string& report,
             const std::string& ranks, const std::string& filtering, double fraction) {
  Config cfg = args.config();
  if (!filtering.empty()) cfg.filtering = filtering_mode_from_string(filtering);
  const std::size_t stride = stride_for(fraction);
  const Dataset d = load_dataset(args.data_dir);
  const auto g = KnowledgeGraph::build(d.train);
  const RuleStore store = load_store(g, rules_dir);
  const EvalRun run = run_evaluation(g, store, d, cfg, stride);
  const auto j = report_json(run, cfg, stride);
  if (report.empty() || report == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(report, std::ios::binary);
    if (!out) throw DataError("cannot write " + report);
    out << j.dump(2) << "\n";
    const auto& m = run.report.overall;
    std::printf("MRR %.4f  Hits@1 %.2f  Hits@3 %.2f  Hits@10 %.2f  (%llu test triples)\n", m.mrr,
                m.hits1, m.hits3, m.hits10,
                static_cast<unsigned long long>(run.report.n_test));
  }
  if (!ranks.empty()) write_ranks_tsv(run, ranks);
  return 0;
}

int cmd_explain(const CommonArgs& args, const std::string& rules_dir,
                const std::vector<std::string>& triple, std::size_t top, bool as_json,
                const std::string& direction) {
  const Config cfg = args.config();
  const Dataset d = load_dataset(args.data_dir);
  const auto g = KnowledgeGraph::build(d.train);
  const RuleStore store = load_store(g, rules_dir);
  // Pair filtering only when set to on.
  const Scorer scorer(g, store,
                      {cfg.score_slots, cfg.filtering == FilteringMode::on,
                       cfg.include_repel_scores});
  const Direction dir = direction == "head" ? Direction::head : Direction::tail;
  const auto res = explain_triple(scorer, triple[1], triple[0], triple[2], top, dir);
  if (as_json) {
    std::cout << to_json(res).dump(2) << "\n";
  } else {
    std::cout << render_text(res);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anchored rule mining and link prediction for knowledge graphs"};
  app.require_subcommand(1);

  CommonArgs ingest_args;
  bool ingest_json = false;
  auto* ingest = app.add_subcommand("ingest", "Validate and fingerprint a dataset");
  add_common(ingest, ingest_args);
  ingest->add_flag("--json", ingest_json, "Print the fingerprint as JSON");

  CommonArgs mine_args;
  std::string mine_out;
  std::string mine_types = "all";
  auto* mine = app.add_subcommand("mine", "Mine rules and write a rule store");
  add_common(mine, mine_args);
  mine->add_option("-o,--out", mine_out, "Rule store directory")->required();
  mine->add_option("-t,--types", mine_types, "Comma list of ear, car, bisear, rofr, or all");

  CommonArgs eval_args;
  std::string eval_rules, eval_report, eval_ranks, eval_filtering;
  double eval_fraction = 1.0;
  auto* eval = app.add_subcommand("eval", "Filtered ranking evaluation");
  add_common(eval, eval_args);
  eval->add_option("-r,--rules", eval_rules, "Rule store directory")->required();
  eval->add_option("-o,--report", eval_report, "report.json path (default: stdout)");
  eval->add_option("--ranks", eval_ranks, "Write per-triple ranks as TSV");
  eval->add_option("--filtering", eval_filtering, "Pair filtering: auto, on or off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  eval->add_option("--test-fraction", eval_fraction,
                   "Evaluate every round(1/f)-th test triple");

  CommonArgs explain_args;
  std::string explain_rules, explain_direction = "tail";
  std::vector<std::string> explain_triple_args;
  std::size_t explain_top = 10;
  bool explain_json = false;
  auto* explain = app.add_subcommand("explain", "Show the rules behind a triple's score");
  add_common(explain, explain_args);
  explain->add_option("-r,--rules", explain_rules, "Rule store directory")->required();
  explain->add_option("triple", explain_triple_args, "HEAD RELATION TAIL")
      ->required()
      ->expected(3);
  explain->add_option("--top", explain_top, "Show at most this many rules");
  explain->add_option("--direction", explain_direction, "Prediction task: head or tail")
      ->check(CLI::IsMember({"head", "tail"}));
  explain->add_flag("--json", explain_json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_args, ingest_json);
    if (*mine) return cmd_mine(mine_args, mine_out, mine_types);
    if (*eval) {
      return cmd_eval(eval_args, eval_rules, eval_report, eval_ranks, eval_filtering,
                      eval_fraction);
    }
    if (*explain) {
      return cmd_explain(explain_args, explain_rules, explain_triple_args, explain_top,
                         explain_json, explain_direction);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
