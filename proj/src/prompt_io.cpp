#include "assembly/prompt_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>

namespace assembly {

using ojson = nlohmann::ordered_json;

PromptMode parse_prompt_mode(std::string_view name) {
  if (name == "placeholder") return PromptMode::Placeholder;
  if (name == "caption") return PromptMode::Caption;
  throw Error(ErrorKind::Schema, "unknown prompt mode '" + std::string(name) + "'");
}

namespace {

ojson timeline_object(std::span<const AssetId> timeline) {
  ojson obj = ojson::object();
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    obj[std::to_string(i + 1)] = ojson{{"clip_id", timeline[i].str()}};
  }
  return obj;
}

}  // namespace

std::string serialize_timeline(std::span<const AssetId> timeline) { return timeline_object(timeline).dump(4); }

std::string build_prompt(const Sample& sample, PromptMode mode) {
  ojson collection = ojson::array();
  for (const auto& a : sample.collection.assets()) {
    ojson rec;
    rec["clip_id"] = a.id.str();
    rec["clip"] = mode == PromptMode::Placeholder ? std::string(kVisualPlaceholder) : a.caption;
    collection.push_back(std::move(rec));
  }
  std::string out;
  out += kSystemLine;
  out += "\n\nCollection:\n";
  out += collection.dump(4);
  out += "\n\nThe current timeline is:\n";
  out += serialize_timeline(sample.input);
  out += "\n\nInstruction: ";
  out += sample.instruction;
  out += "\n";
  return out;
}

std::vector<std::string> split_on_placeholder(std::string_view prompt) {
  std::vector<std::string> segments;
  std::size_t from = 0;
  for (;;) {
    const auto hit = prompt.find(kVisualPlaceholder, from);
    if (hit == std::string_view::npos) {
      segments.emplace_back(prompt.substr(from));
      return segments;
    }
    segments.emplace_back(prompt.substr(from, hit - from));
    from = hit + kVisualPlaceholder.size();
  }
}

std::string join_on_placeholder(const std::vector<std::string>& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0) out += kVisualPlaceholder;
    out += segments[i];
  }
  return out;
}

// Model output --------------------------------------------------------------

namespace {

/// Loose JSON-like value: either a scalar (text) or an object.
struct LooseValue {
  bool is_object = false;
  std::string scalar;
  bool quoted = false;
  std::vector<std::pair<std::string, LooseValue>> members;
};

class LooseParser {
 public:
  explicit LooseParser(std::string_view text) : s_(text) {}

  std::optional<LooseValue> object() {
    skip_ws();
    if (!eat('{')) return std::nullopt;
    LooseValue v;
    v.is_object = true;
    skip_ws();
    if (eat('}')) return v;
    for (;;) {
      auto key = scalar();
      if (!key) return std::nullopt;
      skip_ws();
      if (!eat(':')) return std::nullopt;
      auto val = value();
      if (!val) return std::nullopt;
      v.members.emplace_back(key->scalar, std::move(*val));
      skip_ws();
      if (eat(',')) {
        skip_ws();
        if (eat('}')) return v;  // trailing comma
        continue;
      }
      if (eat('}')) return v;
      return std::nullopt;
    }
  }

 private:
  std::optional<LooseValue> value() {
    skip_ws();
    if (i_ < s_.size() && s_[i_] == '{') return object();
    return scalar();
  }

  std::optional<LooseValue> scalar() {
    skip_ws();
    if (i_ >= s_.size()) return std::nullopt;
    LooseValue v;
    const char q = s_[i_];
    if (q == '"' || q == '\'') {
      ++i_;
      v.quoted = true;
      while (i_ < s_.size() && s_[i_] != q) {
        if (s_[i_] == '\\' && i_ + 1 < s_.size()) ++i_;
        v.scalar.push_back(s_[i_++]);
      }
      if (!eat(q)) return std::nullopt;
      return v;
    }
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '-')) {
      v.scalar.push_back(s_[i_++]);
    }
    if (v.scalar.empty()) return std::nullopt;
    return v;
  }

  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

/// First balanced {...} block, skipping braces inside quoted strings.
std::optional<std::string_view> first_brace_block(std::string_view text) {
  const auto open = text.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  char quote = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"') {
      quote = c;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return text.substr(open, i - open + 1);
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> parse_key(const std::string& key) {
  if (key.empty() || key.size() > 6) return std::nullopt;
  if (!std::all_of(key.begin(), key.end(), [](unsigned char c) { return std::isdigit(c); })) return std::nullopt;
  return std::stoul(key);
}

struct Entry {
  std::string key;
  bool value_is_object = false;
  std::optional<std::string> clip_id;
  bool clip_quoted = false;
};

std::vector<AssetId> apply_timeline_rules(const std::vector<Entry>& entries, Strictness strictness) {
  std::map<std::size_t, AssetId> by_key;
  for (const auto& e : entries) {
    const auto k = parse_key(e.key);
    if (!k || *k == 0) throw Error(ErrorKind::NonConsecutiveKeys, "timeline key '" + e.key + "' is not a position");
    if (!e.value_is_object || !e.clip_id) {
      throw Error(ErrorKind::MissingClipId, "timeline entry " + e.key + " has no clip_id");
    }
    std::string id = *e.clip_id;
    const bool digits = !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isdigit(c); });
    if (strictness == Strictness::Lenient && digits && id.size() < 4) id = std::string(4 - id.size(), '0') + id;
    if (!AssetId::is_valid(id) || (strictness == Strictness::Strict && !e.clip_quoted)) {
      throw Error(ErrorKind::MissingClipId, "timeline entry " + e.key + " has an invalid clip_id '" + *e.clip_id + "'");
    }
    if (!by_key.emplace(*k, AssetId(id)).second) {
      throw Error(ErrorKind::NonConsecutiveKeys, "timeline key " + e.key + " appears twice");
    }
  }
  std::vector<AssetId> out;
  std::size_t expect = 1;
  for (auto& [k, id] : by_key) {
    if (k != expect) {
      throw Error(ErrorKind::NonConsecutiveKeys, "timeline keys must run 1.." + std::to_string(by_key.size()) +
                                                     "; missing " + std::to_string(expect));
    }
    out.push_back(id);
    ++expect;
  }
  return out;
}

}  // namespace

std::vector<AssetId> parse_timeline_output(std::string_view text, Strictness strictness) {
  std::vector<Entry> entries;
  if (strictness == Strictness::Strict) {
    auto doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw Error(ErrorKind::NoTimelineFound, "response is not a single JSON timeline object");
    }
    for (auto& [key, value] : doc.items()) {
      Entry e{key, value.is_object(), std::nullopt, false};
      if (value.is_object() && value.contains("clip_id")) {
        const auto& c = value.at("clip_id");
        if (c.is_string()) {
          e.clip_id = c.get<std::string>();
          e.clip_quoted = true;
        } else {
          e.clip_id = c.dump();
        }
      }
      entries.push_back(std::move(e));
    }
    return apply_timeline_rules(entries, strictness);
  }

  const auto block = first_brace_block(text);
  if (!block) throw Error(ErrorKind::NoTimelineFound, "no {...} block in response");
  LooseParser p(*block);
  auto obj = p.object();
  if (!obj) throw Error(ErrorKind::NoTimelineFound, "could not read the {...} block as a timeline");
  for (auto& [key, value] : obj->members) {
    Entry e{key, value.is_object, std::nullopt, false};
    for (const auto& [k, v] : value.members) {
      if (k == "clip_id" && !v.is_object) {
        e.clip_id = v.scalar;
        e.clip_quoted = v.quoted;
      }
    }
    entries.push_back(std::move(e));
  }
  return apply_timeline_rules(entries, strictness);
}

// Dataset persistence -------------------------------------------------------

ojson sample_to_json(const Sample& s) {
  ojson rec;
  rec["sample_id"] = s.sample_id;
  rec["task"] = s.op_label();
  rec["cue"] = std::string(cue_name(s.cue()));
  ojson collection = ojson::array();
  for (const auto& a : s.collection.assets()) {
    ojson r;
    r["clip_id"] = a.id.str();
    r["caption"] = a.caption;
    r["uri"] = a.uri ? ojson(*a.uri) : ojson(nullptr);
    collection.push_back(std::move(r));
  }
  rec["collection"] = std::move(collection);
  auto ids = [](const Timeline& t) {
    ojson arr = ojson::array();
    for (const auto& id : t) arr.push_back(id.str());
    return arr;
  };
  rec["input_timeline"] = ids(s.input);
  rec["instruction"] = s.instruction;
  rec["output_timeline"] = ids(s.output);
  ojson meta;
  meta["seed"] = s.meta.seed;
  meta["template_ids"] = s.meta.template_ids;
  meta["length"] = s.meta.length;
  meta["sequence_id"] = s.meta.sequence_id;
  rec["meta"] = std::move(meta);
  return rec;
}

Sample sample_from_json(const nlohmann::json& doc) {
  try {
    Sample s;
    s.sample_id = doc.at("sample_id").get<std::string>();
    const auto cue = parse_cue_name(doc.at("cue").get<std::string>());
    const auto task = doc.at("task").get<std::string>();
    std::size_t from = 0;
    for (;;) {
      const auto plus = task.find('+', from);
      s.tasks.push_back(TaskKind{parse_op_name(task.substr(from, plus - from)), cue});
      if (plus == std::string::npos) break;
      from = plus + 1;
    }
    if (s.tasks.size() > 2) throw Error(ErrorKind::Schema, "at most two tasks per sample");
    std::vector<Asset> assets;
    for (const auto& r : doc.at("collection")) {
      Asset a{AssetId(r.at("clip_id").get<std::string>()), r.at("caption").get<std::string>(), std::nullopt};
      if (r.contains("uri") && !r.at("uri").is_null()) a.uri = r.at("uri").get<std::string>();
      assets.push_back(std::move(a));
    }
    s.collection = Collection(std::move(assets));
    auto ids = [&](const nlohmann::json& arr) {
      Timeline t;
      for (const auto& v : arr) {
        AssetId id(v.get<std::string>());
        if (!s.collection.contains(id)) throw Error(ErrorKind::Schema, "timeline id " + id.str() + " not in collection");
        t.push_back(std::move(id));
      }
      return t;
    };
    s.input = ids(doc.at("input_timeline"));
    s.instruction = doc.at("instruction").get<std::string>();
    s.output = ids(doc.at("output_timeline"));
    const auto& meta = doc.at("meta");
    s.meta.seed = meta.at("seed").get<std::uint64_t>();
    s.meta.template_ids = meta.at("template_ids").get<std::vector<std::string>>();
    s.meta.length = meta.at("length").get<std::size_t>();
    s.meta.sequence_id = meta.at("sequence_id").get<std::string>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw;
    throw Error(ErrorKind::Schema, e.what());
  }
}

void write_dataset(const std::vector<Sample>& samples, std::ostream& out) {
  for (const auto& s : samples) out << sample_to_json(s).dump() << '\n';
}

void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write dataset " + path.string());
  write_dataset(samples, out);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<Sample> read_dataset(std::istream& in) {
  std::vector<Sample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      samples.push_back(sample_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Schema, "dataset line " + std::to_string(lineno) + ": " + e.what()).at_line(lineno);
    } catch (const Error& e) {
      throw Error(ErrorKind::Schema, "dataset line " + std::to_string(lineno) + ": " + e.what()).at_line(lineno);
    }
  }
  return samples;
}

std::vector<Sample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read dataset " + path.string());
  return read_dataset(in);
}

}  // namespace assembly
