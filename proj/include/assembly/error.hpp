#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace assembly {

enum class ErrorKind {
  Capacity,
  UnknownId,
  Position,
  Template,
  Parse,
  NoMatch,
  Ambiguous,
  Generation,
  Schema,
  Io,
  NoTimelineFound,
  NonConsecutiveKeys,
  MissingClipId,
  Eval,
  Spec,
};

/// Stable name used in logs, CLI messages and the HTTP error envelope
/// (e.g. "ParseError", "NoMatch").
std::string_view kind_name(ErrorKind kind);

/// Single exception type for the library. The kind is what callers branch on;
/// the optional fields locate the failure (the op that failed during
/// execution, the input line of a file, the character offset in a surface).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  std::optional<std::size_t> op_index;
  std::optional<std::size_t> line;
  std::optional<std::size_t> offset;

  Error& at_op(std::size_t i) {
    op_index = i;
    return *this;
  }
  Error& at_line(std::size_t l) {
    line = l;
    return *this;
  }
  Error& at_offset(std::size_t o) {
    offset = o;
    return *this;
  }

 private:
  ErrorKind kind_;
};

}  // namespace assembly
