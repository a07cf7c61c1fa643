#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "retort/deck.hpp"

namespace retort::detail {

/// Source lines of deck objects, used to anchor semantic diagnostics.
struct SourceMap {
  int solver = 0, grid = 0, species_block = 0, initial = 0, output = 0, sweep = 0;
  std::vector<int> materials, species, bio, reactions, equilibria, boundaries;
};

void validate_into(const SimulationDeck& deck, const SourceMap* lines, const std::string& file,
                   std::vector<Diagnostic>& out);

/// Shortest decimal text that reads back to exactly `v`.
std::string format_double(double v);

}  // namespace retort::detail
