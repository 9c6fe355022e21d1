#pragma once

#include <string>
#include <vector>

#include "ruledict/graph.hpp"

namespace ruledict::testing {

inline constexpr std::size_t kGrammyEntities = 14541;

/// 54 winners of the 52nd Grammy, 6 co-nominees of Rodney Jerkins, 4 of them
/// winners (Kelly Rowland among them), padded to 14541 entities with a chain
/// of filler entities.
inline std::vector<RawTriple> grammy_fixture() {
  std::vector<RawTriple> t;
  const std::string win = "win", nominee = "co_nominee_of";
  const std::string grammy = "52nd_Grammy_Award", rodney = "Rodney_Jerkins";
  std::vector<std::string> winners;
  winners.push_back("Kelly_Rowland");
  for (int i = 1; i < 54; ++i) winners.push_back("winner_" + std::to_string(i));
  for (const auto& w : winners) t.push_back({w, win, grammy});
  for (int i = 0; i < 4; ++i) t.push_back({winners[static_cast<std::size_t>(i)], nominee, rodney});
  t.push_back({"nominee_a", nominee, rodney});
  t.push_back({"nominee_b", nominee, rodney});
  const std::size_t used = winners.size() + 2 + 2;
  const std::size_t filler = kGrammyEntities - used;
  for (std::size_t i = 0; i + 1 < filler; ++i) {
    t.push_back({"filler_" + std::to_string(i), "next", "filler_" + std::to_string(i + 1)});
  }
  return t;
}

}  // namespace ruledict::testing
