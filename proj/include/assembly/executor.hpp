#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "assembly/core.hpp"

namespace assembly {

/// Half-open byte range [begin, end) in the instruction surface.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct ParseResult {
  Instruction instruction;
  std::vector<Span> spans;  // one per op
};

/// Parses templated assembly instructions into edit programs.
///
/// Recognized: operation keywords (add/append/insert/put/place,
/// remove/delete, replace/change/substitute, swap/exchange/interchange),
/// ordinal words first..twentieth and numeric ordinals, "last", "end",
/// "position N", "shot/clip with ID NNNN" and bare "shot NN", double-quoted
/// descriptions, "remove X and replace it with Y", and "Then," between two
/// operations. Throws Error(Parse) with the offset of the first token that
/// could not be consumed.
ParseResult parse_instruction(std::string_view surface);

enum class CueRole { TimelineTarget, CollectionElement };

/// For TimelineTarget roles: the 1-based position of the referenced entry.
/// For CollectionElement roles: the referenced asset id.
using Resolved = std::variant<std::size_t, AssetId>;

/// Throws NoMatch, Ambiguous, UnknownId or PositionError.
Resolved resolve(const CueRef& cue, const Timeline& timeline, const Collection& collection, CueRole role);

/// Applies ops left to right, each against the timeline left by the previous
/// one. Errors carry the index of the failing op.
Timeline execute(const Timeline& timeline, const Collection& collection, const Instruction& instruction);

/// Convenience: parse then execute.
Timeline execute(const Timeline& timeline, const Collection& collection, std::string_view surface);

nlohmann::json to_json(const CueRef& cue);
nlohmann::json to_json(const EditOp& op);

}  // namespace assembly
