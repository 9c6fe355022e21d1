#pragma once

// Run configuration: key = value file plus command-line overrides.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ruledict/stats.hpp"

namespace ruledict {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FilteringMode { automatic, on, off };
enum class RofrMode { task, full };

struct Config {
  double alpha = 0.2;
  std::size_t max_path_len = 3;
  double ci_level = 0.95;
  std::uint64_t exact_ci_max_trials = 15;
  std::size_t score_slots = 10;
  std::uint64_t path_pair_cap = 5'000'000;
  std::uint64_t bisear_pair_cap = 10'000'000;
  std::uint64_t min_body_support = 1;
  bool rofr_include_repels = false;
  RofrMode rofr_mode = RofrMode::task;
  bool include_repel_scores = true;
  FilteringMode filtering = FilteringMode::automatic;
  /// 0 means one worker per hardware thread. Not part of the snapshot:
  /// outputs do not depend on it.
  unsigned threads = 0;

  TestParams test() const { return {ci_level, exact_ci_max_trials}; }

  void set(std::string_view key, std::string_view value);
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(value) +
                      "'");
  }
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + std::string(value) +
                    "'");
}

}  // namespace detail

inline FilteringMode filtering_mode_from_string(std::string_view s) {
  if (s == "auto") return FilteringMode::automatic;
  if (s == "on") return FilteringMode::on;
  if (s == "off") return FilteringMode::off;
  throw ConfigError("filtering must be auto, on or off: '" + std::string(s) + "'");
}

inline std::string_view to_string(FilteringMode m) {
  switch (m) {
    case FilteringMode::automatic:
      return "auto";
    case FilteringMode::on:
      return "on";
    case FilteringMode::off:
      return "off";
  }
  return "";
}

inline void Config::set(std::string_view key, std::string_view value) {
  using detail::parse_bool;
  using detail::parse_number;
  key = detail::trim(key);
  value = detail::trim(value);
  if (key == "alpha") {
    alpha = parse_number<double>(key, value);
  } else if (key == "max_path_len") {
    max_path_len = parse_number<std::size_t>(key, value);
    if (max_path_len < 1 || max_path_len > 3) throw ConfigError("max_path_len must be 1..3");
  } else if (key == "ci_level") {
    ci_level = parse_number<double>(key, value);
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("ci_level must be in (0, 1)");
  } else if (key == "exact_ci_max_trials") {
    exact_ci_max_trials = parse_number<std::uint64_t>(key, value);
  } else if (key == "score_slots") {
    score_slots = parse_number<std::size_t>(key, value);
    if (score_slots == 0) throw ConfigError("score_slots must be positive");
  } else if (key == "path_pair_cap") {
    path_pair_cap = parse_number<std::uint64_t>(key, value);
  } else if (key == "bisear_pair_cap") {
    bisear_pair_cap = parse_number<std::uint64_t>(key, value);
  } else if (key == "min_body_support") {
    min_body_support = parse_number<std::uint64_t>(key, value);
  } else if (key == "rofr_include_repels") {
    rofr_include_repels = parse_bool(key, value);
  } else if (key == "rofr_mode") {
    if (value == "task") {
      rofr_mode = RofrMode::task;
    } else if (value == "full") {
      rofr_mode = RofrMode::full;
    } else {
      throw ConfigError("rofr_mode must be task or full");
    }
  } else if (key == "include_repel_scores") {
    include_repel_scores = parse_bool(key, value);
  } else if (key == "filtering") {
    filtering = filtering_mode_from_string(value);
  } else if (key == "threads") {
    threads = parse_number<unsigned>(key, value);
  } else {
    throw ConfigError("unknown config key: " + std::string(key));
  }
}

/// Applies one "key=value" assignment.
inline void apply_override(Config& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value: '" + std::string(assignment) + "'");
  }
  cfg.set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

/// Lines are `key = value`; blank lines and lines starting with '#' are
/// ignored.
inline Config load_config(const std::filesystem::path& path, Config cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      apply_override(cfg, body);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

inline nlohmann::ordered_json to_json(const Config& c) {
  return {{"alpha", c.alpha},
          {"max_path_len", c.max_path_len},
          {"ci_level", c.ci_level},
          {"exact_ci_max_trials", c.exact_ci_max_trials},
          {"score_slots", c.score_slots},
          {"path_pair_cap", c.path_pair_cap},
          {"bisear_pair_cap", c.bisear_pair_cap},
          {"min_body_support", c.min_body_support},
          {"rofr_include_repels", c.rofr_include_repels},
          {"rofr_mode", c.rofr_mode == RofrMode::task ? "task" : "full"},
          {"include_repel_scores", c.include_repel_scores},
          {"filtering", std::string(to_string(c.filtering))}};
}

}  // namespace ruledict
