// Instruction grammar for the oracle executor.

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "assembly/executor.hpp"
#include "assembly/templates.hpp"

namespace assembly {

namespace {

enum class TokKind { Word, Quoted, Punct };

struct Token {
  TokKind kind;
  std::string text;  // lowercased for words, raw content for quoted strings
  std::size_t begin;
  std::size_t end;
};

constexpr std::string_view kOpenCurly = "\xe2\x80\x9c";
constexpr std::string_view kCloseCurly = "\xe2\x80\x9d";

bool word_char(unsigned char c) { return std::isalnum(c) || c == '-' || c == '\''; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    const bool curly = s.substr(i, kOpenCurly.size()) == kOpenCurly;
    if (c == '"' || curly) {
      const auto open_len = curly ? kOpenCurly.size() : 1;
      std::size_t j = i + open_len;
      std::size_t close_len = 0;
      while (j < s.size()) {
        if (s[j] == '"') {
          close_len = 1;
          break;
        }
        if (s.substr(j, kCloseCurly.size()) == kCloseCurly) {
          close_len = kCloseCurly.size();
          break;
        }
        ++j;
      }
      if (close_len == 0) throw Error(ErrorKind::Parse, "unterminated quoted description").at_offset(i);
      out.push_back({TokKind::Quoted, std::string(s.substr(i + open_len, j - i - open_len)), i, j + close_len});
      i = j + close_len;
      continue;
    }
    if (word_char(c)) {
      std::size_t j = i;
      std::string w;
      while (j < s.size() && word_char(static_cast<unsigned char>(s[j]))) {
        w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[j]))));
        ++j;
      }
      out.push_back({TokKind::Word, std::move(w), i, j});
      i = j;
      continue;
    }
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!') {
      out.push_back({TokKind::Punct, std::string(1, static_cast<char>(c)), i, i + 1});
      ++i;
      continue;
    }
    throw Error(ErrorKind::Parse, std::string("unexpected character '") + static_cast<char>(c) + "'").at_offset(i);
  }
  return out;
}

std::optional<OpKind> op_keyword(std::string_view w) {
  static const std::vector<std::pair<std::string_view, OpKind>> words = {
      {"insert", OpKind::Insert},     {"add", OpKind::Insert},         {"append", OpKind::Insert},
      {"put", OpKind::Insert},        {"place", OpKind::Insert},       {"remove", OpKind::Remove},
      {"delete", OpKind::Remove},     {"replace", OpKind::Replace},    {"change", OpKind::Replace},
      {"substitute", OpKind::Replace}, {"swap", OpKind::Swap},         {"exchange", OpKind::Swap},
      {"interchange", OpKind::Swap}};
  for (const auto& [word, op] : words) {
    if (word == w) return op;
  }
  return std::nullopt;
}

bool is_filler(std::string_view w) {
  static const std::set<std::string_view> words = {
      "the",      "a",        "an",      "shot",   "shots",   "clip",     "clips",    "image",    "images",
      "frame",    "frames",   "picture", "with",   "at",      "to",       "of",       "in",       "into",
      "from",     "as",       "for",     "and",    "positions", "slot",   "places",   "timeline", "sequence",
      "so",       "that",     "it",      "becomes", "showing", "shows",   "described", "where",   "one",
      "please",   "on",       "by",      "its",    "this",    "current",  "element",  "video",    "spot",
      "position"};
  return words.contains(w);
}

bool is_noun(std::string_view w) {
  return w == "shot" || w == "clip" || w == "image" || w == "frame" || w == "picture";
}

bool is_number(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::optional<Position> position_word(std::string_view w) {
  if (w == "last" || w == "end") return Position::last();
  if (w == "beginning" || w == "start") return Position::at(1);
  if (auto n = ordinal_value(w)) return Position::at(*n);
  return std::nullopt;
}

AssetId id_from_digits(const Token& t) {
  if (t.text.size() > 4) throw Error(ErrorKind::Parse, "identifier longer than 4 digits: " + t.text).at_offset(t.begin);
  return AssetId(std::string(4 - t.text.size(), '0') + t.text);
}

struct Ref {
  CueRef cue;
  std::size_t offset;
};

bool is_position(const CueRef& c) { return std::holds_alternative<PositionRef>(c); }

EditOp build_op(OpKind op, bool append, std::vector<Ref> refs, std::size_t clause_begin) {
  auto fail = [&](const std::string& msg, std::size_t at) { return Error(ErrorKind::Parse, msg).at_offset(at); };
  switch (op) {
    case OpKind::Insert: {
      std::optional<Ref> element;
      std::optional<Ref> at;
      for (auto& r : refs) {
        auto& slot = is_position(r.cue) ? at : element;
        if (slot) throw fail("too many references for insert", r.offset);
        slot = std::move(r);
      }
      if (!element) throw fail("insert needs an element from the collection (an id or a description)", clause_begin);
      Position pos = Position::last();
      if (at) {
        pos = std::get<PositionRef>(at->cue).position;
      } else if (!append) {
        throw fail("insert needs a target position", clause_begin);
      }
      return InsertOp{std::move(element->cue), pos};
    }
    case OpKind::Remove:
      if (refs.size() != 1) throw fail("remove takes exactly one reference", clause_begin);
      return RemoveOp{std::move(refs[0].cue)};
    case OpKind::Replace:
      if (refs.size() != 2) throw fail("replace takes a target and a replacement", clause_begin);
      if (is_position(refs[1].cue)) throw fail("the replacement must be an id or a description", refs[1].offset);
      return ReplaceOp{std::move(refs[0].cue), std::move(refs[1].cue)};
    case OpKind::Swap:
      if (refs.size() != 2) throw fail("swap takes exactly two references", clause_begin);
      return SwapOp{std::move(refs[0].cue), std::move(refs[1].cue)};
  }
  throw fail("unsupported operation", clause_begin);
}

EditOp parse_clause(const std::vector<Token>& toks) {
  std::vector<std::pair<OpKind, std::size_t>> ops;
  bool append = false;
  std::vector<Ref> refs;

  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.kind == TokKind::Punct) continue;
    if (t.kind == TokKind::Quoted) {
      auto inner = normalize_caption(t.text);
      if (inner.empty()) throw Error(ErrorKind::Parse, "empty quoted description").at_offset(t.begin);
      if (auto p = position_word(inner); p && inner.find(' ') == std::string::npos) {
        refs.push_back({PositionRef{*p}, t.begin});
      } else {
        refs.push_back({SemanticRef{t.text}, t.begin});
      }
      continue;
    }
    const auto& w = t.text;
    const Token* next = i + 1 < toks.size() ? &toks[i + 1] : nullptr;
    const bool next_is_number = next && next->kind == TokKind::Word && is_number(next->text);

    if (auto op = op_keyword(w)) {
      ops.emplace_back(*op, t.begin);
      if (w == "append") append = true;
      continue;
    }
    if (w == "id" && next_is_number) {
      refs.push_back({IdRef{id_from_digits(*next)}, t.begin});
      ++i;
      continue;
    }
    if (w == "position" && next_is_number) {
      if (next->text.size() > 6 || std::stoll(next->text) < 1) {
        throw Error(ErrorKind::Parse, "positions are numbered from 1").at_offset(next->begin);
      }
      refs.push_back({PositionRef{Position::at(std::stoll(next->text))}, t.begin});
      ++i;
      continue;
    }
    if (is_noun(w) && next_is_number) {
      refs.push_back({IdRef{id_from_digits(*next)}, t.begin});
      ++i;
      continue;
    }
    if (auto p = position_word(w)) {
      refs.push_back({PositionRef{*p}, t.begin});
      continue;
    }
    if (is_filler(w)) continue;
    throw Error(ErrorKind::Parse, "unrecognized word '" + w + "'").at_offset(t.begin);
  }

  const auto clause_begin = toks.empty() ? 0 : toks.front().begin;
  if (ops.empty()) throw Error(ErrorKind::Parse, "no operation keyword found").at_offset(clause_begin);
  OpKind op = ops.front().first;
  if (ops.size() == 2 && ops[0].first == OpKind::Remove && ops[1].first == OpKind::Replace) {
    op = OpKind::Replace;  // "remove X and replace it with Y"
  } else if (ops.size() > 1) {
    throw Error(ErrorKind::Parse, "more than one operation in a clause; join operations with 'Then,'")
        .at_offset(ops[1].second);
  }
  return build_op(op, append, std::move(refs), clause_begin);
}

}  // namespace

ParseResult parse_instruction(std::string_view surface) {
  const auto toks = tokenize(surface);
  std::vector<std::vector<Token>> clauses(1);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.kind == TokKind::Word && t.text == "then") {
      auto& cur = clauses.back();
      // Drop a dangling "and" before "then".
      if (!cur.empty() && cur.back().kind == TokKind::Word && cur.back().text == "and") cur.pop_back();
      if (i + 1 < toks.size() && toks[i + 1].kind == TokKind::Punct && toks[i + 1].text == ",") ++i;
      clauses.emplace_back();
      continue;
    }
    clauses.back().push_back(t);
  }

  ParseResult result;
  result.instruction.surface = std::string(surface);
  for (const auto& clause : clauses) {
    const bool empty = std::all_of(clause.begin(), clause.end(), [](const Token& t) { return t.kind == TokKind::Punct; });
    if (empty) {
      const auto at = clause.empty() ? surface.size() : clause.front().begin;
      throw Error(ErrorKind::Parse, "empty instruction clause").at_offset(at);
    }
    result.instruction.ops.push_back(parse_clause(clause));
    // Span excludes leading punctuation left over from the previous clause.
    auto first = std::find_if(clause.begin(), clause.end(), [](const Token& t) { return t.kind != TokKind::Punct; });
    result.spans.push_back({first->begin, clause.back().end});
  }
  if (result.instruction.ops.size() > 2) {
    throw Error(ErrorKind::Parse, "at most two operations per instruction").at_offset(result.spans[2].begin);
  }
  return result;
}

}  // namespace assembly
