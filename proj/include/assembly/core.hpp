#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "assembly/error.hpp"
#include "assembly/rng.hpp"

namespace assembly {

inline constexpr std::size_t kIdSpace = 10000;

/// Identifier token of an asset: exactly four decimal digits, zero padded.
class AssetId {
 public:
  /// Validates `text`; throws Error(Schema) unless it is exactly 4 digits.
  explicit AssetId(std::string text);
  static AssetId from_number(std::size_t n);
  static bool is_valid(std::string_view text);

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const AssetId&, const AssetId&) = default;
  friend bool operator==(const AssetId&, const AssetId&) = default;

 private:
  std::string value_;
};

struct Asset {
  AssetId id;
  std::string caption;
  std::optional<std::string> uri;

  friend bool operator==(const Asset&, const Asset&) = default;
};

/// Lowercase, trim, collapse runs of whitespace, strip terminal punctuation.
/// Semantic cues are compared on this form.
std::string normalize_caption(std::string_view caption);

/// Pool of assets with the id registry. The registry is the look-up table
/// that maps identifier tokens to assets and back.
class Collection {
 public:
  Collection() = default;
  /// Throws Error(Schema) on duplicate ids, empty captions, or a size
  /// outside [1, 9999].
  explicit Collection(std::vector<Asset> assets);

  std::size_t size() const noexcept { return assets_.size(); }
  const std::vector<Asset>& assets() const noexcept { return assets_; }

  bool contains(const AssetId& id) const { return index_.contains(id.str()); }
  std::optional<std::size_t> index_of(const AssetId& id) const;
  /// Throws Error(UnknownId) naming the id.
  const Asset& at(const AssetId& id) const;
  const Asset& at(std::size_t index) const { return assets_.at(index); }

  friend bool operator==(const Collection& a, const Collection& b) { return a.assets_ == b.assets_; }

 private:
  std::vector<Asset> assets_;
  std::unordered_map<std::string, std::size_t> index_;
};

using Timeline = std::vector<AssetId>;

/// 1-based timeline position or the symbolic LAST.
class Position {
 public:
  Position() = default;  // LAST
  static Position at(std::int64_t index) { return Position(index); }
  static Position last() { return Position(); }

  bool is_last() const noexcept { return !index_.has_value(); }
  std::int64_t index() const { return index_.value(); }

  /// Concrete 1-based index given what LAST means in context
  /// (len for targets, len + 1 for insertion points).
  std::int64_t resolve(std::size_t last_value) const {
    return index_ ? *index_ : static_cast<std::int64_t>(last_value);
  }

  friend bool operator==(const Position&, const Position&) = default;

 private:
  explicit Position(std::int64_t i) : index_(i) {}
  std::optional<std::int64_t> index_;
};

struct PositionRef {
  Position position;
  friend bool operator==(const PositionRef&, const PositionRef&) = default;
};
struct IdRef {
  AssetId id;
  friend bool operator==(const IdRef&, const IdRef&) = default;
};
struct SemanticRef {
  std::string description;
  friend bool operator==(const SemanticRef&, const SemanticRef&) = default;
};

using CueRef = std::variant<PositionRef, IdRef, SemanticRef>;

struct InsertOp {
  CueRef element;  // IdRef or SemanticRef
  Position at;
  friend bool operator==(const InsertOp&, const InsertOp&) = default;
};
struct RemoveOp {
  CueRef target;
  friend bool operator==(const RemoveOp&, const RemoveOp&) = default;
};
struct ReplaceOp {
  CueRef target;
  CueRef replacement;  // IdRef or SemanticRef
  friend bool operator==(const ReplaceOp&, const ReplaceOp&) = default;
};
struct SwapOp {
  CueRef a;
  CueRef b;
  friend bool operator==(const SwapOp&, const SwapOp&) = default;
};

using EditOp = std::variant<InsertOp, RemoveOp, ReplaceOp, SwapOp>;

struct Instruction {
  std::string surface;
  std::vector<EditOp> ops;
};

enum class OpKind { Insert, Remove, Replace, Swap };
enum class CueKind { Positional, Semantic };

/// One of the eight assembly tasks.
struct TaskKind {
  OpKind op;
  CueKind cue;

  /// Index order: positional insert..swap, then semantic.
  std::size_t index() const noexcept {
    return static_cast<std::size_t>(cue) * 4 + static_cast<std::size_t>(op);
  }
  static TaskKind from_index(std::size_t i);
  static const std::vector<TaskKind>& all();

  std::string label() const;  // "insert/positional"

  friend bool operator==(const TaskKind&, const TaskKind&) = default;
};

std::string_view op_name(OpKind op);
std::string_view cue_name(CueKind cue);
OpKind parse_op_name(std::string_view name);
CueKind parse_cue_name(std::string_view name);

OpKind op_kind(const EditOp& op);

// Identifier registry ----------------------------------------------------

/// `count` distinct ids sampled without replacement from 0000-9999.
/// Throws Error(Capacity) when count exceeds the id space.
std::vector<AssetId> assign_ids(std::size_t count, Rng& rng);

/// Maps ids back to assets in order. Throws Error(UnknownId).
std::vector<Asset> reconstruct(std::span<const AssetId> ids, const Collection& collection);

// Pure edits ---------------------------------------------------------------
// All throw Error(Position) on out-of-range indices.

Timeline insert_at(const Timeline& timeline, const AssetId& id, Position at);
Timeline remove_at(const Timeline& timeline, Position at);
Timeline replace_at(const Timeline& timeline, Position at, const AssetId& id);
Timeline swap_positions(const Timeline& timeline, Position a, Position b);

}  // namespace assembly

template <>
struct std::hash<assembly::AssetId> {
  std::size_t operator()(const assembly::AssetId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
