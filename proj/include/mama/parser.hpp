#pragma once

#include "mama/model.hpp"

#include <string>
#include <string_view>

namespace mama {

struct ParsedModel {
    MarkovAutomaton ma;
    GoalSet goals;
};

/// Reads the `.ma` text format (see docs/format.md). States are interned in
/// order of first appearance. Errors carry the 1-based line number.
ParsedModel parse(std::string_view text);

/// Inverse of `parse` up to state interning order. Numbers are written with
/// 17 significant digits so they re-parse to the same bits.
std::string serialize(const MarkovAutomaton& ma, const GoalSet& goals);

/// Reads and parses a model file; I/O failures are reported as SyntaxError on line 0.
ParsedModel parse_file(const std::string& path);

/// True if `id` is a valid state identifier.
bool is_state_id(std::string_view id);

} // namespace mama
