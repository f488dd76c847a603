#include "assembly/core.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace assembly {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Capacity: return "CapacityError";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::Position: return "PositionError";
    case ErrorKind::Template: return "TemplateError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::NoMatch: return "NoMatch";
    case ErrorKind::Ambiguous: return "Ambiguous";
    case ErrorKind::Generation: return "GenerationError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::NoTimelineFound: return "NoTimelineFound";
    case ErrorKind::NonConsecutiveKeys: return "NonConsecutiveKeys";
    case ErrorKind::MissingClipId: return "MissingClipId";
    case ErrorKind::Eval: return "EvalError";
    case ErrorKind::Spec: return "SpecError";
  }
  return "Error";
}

// AssetId ------------------------------------------------------------------

bool AssetId::is_valid(std::string_view text) {
  return text.size() == 4 &&
         std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); });
}

AssetId::AssetId(std::string text) : value_(std::move(text)) {
  if (!is_valid(value_)) {
    throw Error(ErrorKind::Schema, "invalid asset id '" + value_ + "': expected 4 digits");
  }
}

AssetId AssetId::from_number(std::size_t n) {
  if (n >= kIdSpace) throw Error(ErrorKind::Capacity, "asset id number out of range: " + std::to_string(n));
  std::string s = std::to_string(n);
  return AssetId(std::string(4 - s.size(), '0') + s);
}

// Captions -----------------------------------------------------------------

std::string normalize_caption(std::string_view caption) {
  std::string out;
  out.reserve(caption.size());
  bool pending_space = false;
  for (unsigned char c : caption) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  auto terminal = [](char c) { return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':'; };
  while (!out.empty() && (terminal(out.back()) || out.back() == ' ')) out.pop_back();
  return out;
}

// Collection ---------------------------------------------------------------

Collection::Collection(std::vector<Asset> assets) : assets_(std::move(assets)) {
  if (assets_.empty() || assets_.size() >= kIdSpace) {
    throw Error(ErrorKind::Schema, "collection size must be in [1, 9999], got " + std::to_string(assets_.size()));
  }
  index_.reserve(assets_.size());
  for (std::size_t i = 0; i < assets_.size(); ++i) {
    const auto& a = assets_[i];
    if (normalize_caption(a.caption).empty()) {
      throw Error(ErrorKind::Schema, "asset " + a.id.str() + " has an empty caption");
    }
    if (!index_.emplace(a.id.str(), i).second) {
      throw Error(ErrorKind::Schema, "duplicate asset id " + a.id.str());
    }
  }
}

std::optional<std::size_t> Collection::index_of(const AssetId& id) const {
  auto it = index_.find(id.str());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Asset& Collection::at(const AssetId& id) const {
  auto it = index_.find(id.str());
  if (it == index_.end()) throw Error(ErrorKind::UnknownId, "unknown asset id " + id.str());
  return assets_[it->second];
}

// Task kinds ---------------------------------------------------------------

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::Insert: return "insert";
    case OpKind::Remove: return "remove";
    case OpKind::Replace: return "replace";
    case OpKind::Swap: return "swap";
  }
  return "?";
}

std::string_view cue_name(CueKind cue) { return cue == CueKind::Positional ? "positional" : "semantic"; }

OpKind parse_op_name(std::string_view name) {
  for (auto op : {OpKind::Insert, OpKind::Remove, OpKind::Replace, OpKind::Swap}) {
    if (op_name(op) == name) return op;
  }
  throw Error(ErrorKind::Schema, "unknown operation '" + std::string(name) + "'");
}

CueKind parse_cue_name(std::string_view name) {
  if (name == "positional") return CueKind::Positional;
  if (name == "semantic") return CueKind::Semantic;
  throw Error(ErrorKind::Schema, "unknown cue '" + std::string(name) + "'");
}

TaskKind TaskKind::from_index(std::size_t i) {
  if (i >= 8) throw Error(ErrorKind::Schema, "task index out of range");
  return TaskKind{static_cast<OpKind>(i % 4), static_cast<CueKind>(i / 4)};
}

const std::vector<TaskKind>& TaskKind::all() {
  static const std::vector<TaskKind> kinds = [] {
    std::vector<TaskKind> v;
    for (std::size_t i = 0; i < 8; ++i) v.push_back(from_index(i));
    return v;
  }();
  return kinds;
}

std::string TaskKind::label() const { return std::string(op_name(op)) + "/" + std::string(cue_name(cue)); }

OpKind op_kind(const EditOp& op) { return static_cast<OpKind>(op.index()); }

// Registry -----------------------------------------------------------------

std::vector<AssetId> assign_ids(std::size_t count, Rng& rng) {
  if (count > kIdSpace) {
    throw Error(ErrorKind::Capacity,
                "cannot assign " + std::to_string(count) + " distinct ids from a space of " + std::to_string(kIdSpace));
  }
  // Partial Fisher-Yates over the whole id space.
  std::vector<std::uint16_t> pool(kIdSpace);
  std::iota(pool.begin(), pool.end(), std::uint16_t{0});
  std::vector<AssetId> ids;
  ids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(kIdSpace - i));
    std::swap(pool[i], pool[j]);
    ids.push_back(AssetId::from_number(pool[i]));
  }
  return ids;
}

std::vector<Asset> reconstruct(std::span<const AssetId> ids, const Collection& collection) {
  std::vector<Asset> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(collection.at(id));
  return out;
}

// Edits --------------------------------------------------------------------

namespace {

std::size_t checked_index(Position p, std::size_t last_value, std::size_t upper, std::string_view what) {
  const auto i = p.resolve(last_value);
  if (i < 1 || static_cast<std::size_t>(i) > upper) {
    throw Error(ErrorKind::Position, std::string(what) + " position " + std::to_string(i) + " outside [1, " +
                                         std::to_string(upper) + "]");
  }
  return static_cast<std::size_t>(i - 1);
}

}  // namespace

Timeline insert_at(const Timeline& timeline, const AssetId& id, Position at) {
  const auto n = timeline.size();
  const auto i = checked_index(at, n + 1, n + 1, "insert");
  Timeline out = timeline;
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(i), id);
  return out;
}

Timeline remove_at(const Timeline& timeline, Position at) {
  if (timeline.empty()) throw Error(ErrorKind::Position, "cannot remove from an empty timeline");
  const auto i = checked_index(at, timeline.size(), timeline.size(), "remove");
  Timeline out = timeline;
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
  return out;
}

Timeline replace_at(const Timeline& timeline, Position at, const AssetId& id) {
  const auto i = checked_index(at, timeline.size(), timeline.size(), "replace");
  Timeline out = timeline;
  out[i] = id;
  return out;
}

Timeline swap_positions(const Timeline& timeline, Position a, Position b) {
  const auto i = checked_index(a, timeline.size(), timeline.size(), "swap");
  const auto j = checked_index(b, timeline.size(), timeline.size(), "swap");
  Timeline out = timeline;
  std::swap(out[i], out[j]);
  return out;
}

}  // namespace assembly
