#include "assembly/executor.hpp"

namespace assembly {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t timeline_position(const Resolved& r) { return std::get<std::size_t>(r); }
const AssetId& element_id(const Resolved& r) { return std::get<AssetId>(r); }

}  // namespace

Resolved resolve(const CueRef& cue, const Timeline& timeline, const Collection& collection, CueRole role) {
  const bool target = role == CueRole::TimelineTarget;
  return std::visit(
      overloaded{
          [&](const PositionRef& p) -> Resolved {
            if (!target) throw Error(ErrorKind::Position, "a timeline position cannot name a collection element");
            const auto i = p.position.resolve(timeline.size());
            if (i < 1 || static_cast<std::size_t>(i) > timeline.size()) {
              throw Error(ErrorKind::Position, "position " + std::to_string(i) + " outside a timeline of length " +
                                                   std::to_string(timeline.size()));
            }
            return static_cast<std::size_t>(i);
          },
          [&](const IdRef& ref) -> Resolved {
            if (!collection.contains(ref.id)) throw Error(ErrorKind::UnknownId, "unknown asset id " + ref.id.str());
            if (!target) return ref.id;
            // Duplicates resolve to the first occurrence.
            for (std::size_t i = 0; i < timeline.size(); ++i) {
              if (timeline[i] == ref.id) return i + 1;
            }
            throw Error(ErrorKind::NoMatch, "asset " + ref.id.str() + " is not in the timeline");
          },
          [&](const SemanticRef& ref) -> Resolved {
            const auto wanted = normalize_caption(ref.description);
            if (target) {
              std::optional<std::size_t> first;
              std::optional<AssetId> match;
              for (std::size_t i = 0; i < timeline.size(); ++i) {
                if (normalize_caption(collection.at(timeline[i]).caption) != wanted) continue;
                if (match && *match != timeline[i]) {
                  throw Error(ErrorKind::Ambiguous, "more than one timeline entry matches \"" + ref.description + "\"");
                }
                if (!first) first = i + 1;
                match = timeline[i];
              }
              if (!first) throw Error(ErrorKind::NoMatch, "no timeline entry matches \"" + ref.description + "\"");
              return *first;
            }
            std::optional<AssetId> match;
            for (const auto& a : collection.assets()) {
              if (normalize_caption(a.caption) != wanted) continue;
              if (match) throw Error(ErrorKind::Ambiguous, "more than one asset matches \"" + ref.description + "\"");
              match = a.id;
            }
            if (!match) throw Error(ErrorKind::NoMatch, "no asset matches \"" + ref.description + "\"");
            return *match;
          },
      },
      cue);
}

Timeline execute(const Timeline& timeline, const Collection& collection, const Instruction& instruction) {
  Timeline current = timeline;
  for (std::size_t i = 0; i < instruction.ops.size(); ++i) {
    try {
      current = std::visit(
          overloaded{
              [&](const InsertOp& op) {
                const auto id = element_id(resolve(op.element, current, collection, CueRole::CollectionElement));
                return insert_at(current, id, op.at);
              },
              [&](const RemoveOp& op) {
                const auto at = timeline_position(resolve(op.target, current, collection, CueRole::TimelineTarget));
                return remove_at(current, Position::at(static_cast<std::int64_t>(at)));
              },
              [&](const ReplaceOp& op) {
                const auto at = timeline_position(resolve(op.target, current, collection, CueRole::TimelineTarget));
                const auto id = element_id(resolve(op.replacement, current, collection, CueRole::CollectionElement));
                return replace_at(current, Position::at(static_cast<std::int64_t>(at)), id);
              },
              [&](const SwapOp& op) {
                const auto a = timeline_position(resolve(op.a, current, collection, CueRole::TimelineTarget));
                const auto b = timeline_position(resolve(op.b, current, collection, CueRole::TimelineTarget));
                return swap_positions(current, Position::at(static_cast<std::int64_t>(a)),
                                      Position::at(static_cast<std::int64_t>(b)));
              },
          },
          instruction.ops[i]);
    } catch (const Error& e) {
      Error annotated(e.kind(), "op " + std::to_string(i + 1) + ": " + e.what());
      annotated.at_op(i);
      throw annotated;
    }
  }
  return current;
}

Timeline execute(const Timeline& timeline, const Collection& collection, std::string_view surface) {
  return execute(timeline, collection, parse_instruction(surface).instruction);
}

nlohmann::json to_json(const CueRef& cue) {
  return std::visit(overloaded{
                        [](const PositionRef& p) -> nlohmann::json {
                          if (p.position.is_last()) return {{"position", "last"}};
                          return {{"position", p.position.index()}};
                        },
                        [](const IdRef& r) -> nlohmann::json { return {{"id", r.id.str()}}; },
                        [](const SemanticRef& r) -> nlohmann::json { return {{"description", r.description}}; },
                    },
                    cue);
}

nlohmann::json to_json(const EditOp& op) {
  return std::visit(overloaded{
                        [](const InsertOp& o) -> nlohmann::json {
                          return {{"op", "insert"}, {"element", to_json(o.element)}, {"at", to_json(PositionRef{o.at})}};
                        },
                        [](const RemoveOp& o) -> nlohmann::json {
                          return {{"op", "remove"}, {"target", to_json(o.target)}};
                        },
                        [](const ReplaceOp& o) -> nlohmann::json {
                          return {{"op", "replace"},
                                  {"target", to_json(o.target)},
                                  {"replacement", to_json(o.replacement)}};
                        },
                        [](const SwapOp& o) -> nlohmann::json {
                          return {{"op", "swap"}, {"a", to_json(o.a)}, {"b", to_json(o.b)}};
                        },
                    },
                    op);
}

}  // namespace assembly
