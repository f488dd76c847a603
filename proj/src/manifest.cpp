#include "assembly/manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "assembly/core.hpp"
#include "assembly/error.hpp"
#include "assembly/rng.hpp"
#include "assembly/templates.hpp"

namespace assembly {

namespace {

using nlohmann::json;

std::optional<SourceSequence> sequence_from_json(const json& rec, std::size_t fallback_index) {
  SourceSequence seq;
  if (rec.contains("sequence_id")) {
    seq.sequence_id = rec.at("sequence_id").get<std::string>();
  } else {
    seq.sequence_id = "seq-" + std::to_string(fallback_index);
  }
  for (const auto& item : rec.at("items")) {
    SourceItem si;
    si.caption = item.at("caption").get<std::string>();
    if (item.contains("uri") && !item.at("uri").is_null()) si.uri = item.at("uri").get<std::string>();
    seq.items.push_back(std::move(si));
  }
  if (seq.items.size() < 2) return std::nullopt;
  for (const auto& item : seq.items) {
    if (normalize_caption(item.caption).empty()) return std::nullopt;
  }
  return seq;
}

void add(SourceManifest& m, const json& rec, std::size_t index) {
  if (auto seq = sequence_from_json(rec, index)) {
    m.sequences.push_back(std::move(*seq));
  } else {
    ++m.rejected;
  }
}

}  // namespace

SourceManifest parse_manifest(std::string_view text) {
  SourceManifest m;
  // A whole-document parse first; JSONL falls through to the line reader.
  if (auto doc = json::parse(text.begin(), text.end(), nullptr, false); !doc.is_discarded()) {
    try {
      if (doc.is_array()) {
        for (std::size_t i = 0; i < doc.size(); ++i) add(m, doc[i], i);
        return m;
      }
      if (doc.is_object() && doc.contains("sequences")) {
        const auto& seqs = doc.at("sequences");
        for (std::size_t i = 0; i < seqs.size(); ++i) add(m, seqs[i], i);
        return m;
      }
      if (doc.is_object()) {
        add(m, doc, 0);
        return m;
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("manifest schema error: ") + e.what()).at_line(1);
    }
    throw Error(ErrorKind::Parse, "manifest must be an array, an object or JSONL").at_line(1);
  }

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      add(m, json::parse(line), lineno - 1);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, "manifest line " + std::to_string(lineno) + ": " + e.what()).at_line(lineno);
    }
  }
  return m;
}

SourceManifest ingest_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot read manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

void write_manifest_jsonl(const SourceManifest& manifest, std::ostream& out) {
  for (const auto& seq : manifest.sequences) {
    nlohmann::ordered_json rec;
    rec["sequence_id"] = seq.sequence_id;
    rec["items"] = nlohmann::ordered_json::array();
    for (const auto& item : seq.items) {
      nlohmann::ordered_json i;
      i["caption"] = item.caption;
      i["uri"] = item.uri ? nlohmann::ordered_json(*item.uri) : nlohmann::ordered_json(nullptr);
      rec["items"].push_back(std::move(i));
    }
    out << rec.dump() << '\n';
  }
}

SourceManifest synthetic_manifest(const SyntheticManifestOptions& options) {
  static constexpr std::array<std::string_view, 12> adjectives = {
      "small", "young", "happy", "tired", "curious", "tall", "playful", "quiet", "smiling", "busy", "lonely", "brave"};
  static constexpr std::array<std::string_view, 12> subjects = {
      "dog", "cat", "girl", "boy", "woman", "man", "horse", "bird", "child", "couple", "chef", "surfer"};
  static constexpr std::array<std::string_view, 12> actions = {
      "running",          "sitting",         "eating ice cream", "jumping",  "reading a book", "pouring water",
      "looking at the camera", "climbing a wall", "dancing", "sleeping", "waving", "laughing"};
  static constexpr std::array<std::string_view, 12> places = {
      "on the beach", "in a park", "in the kitchen", "near a lake", "on a bridge", "in the snow",
      "at a market",  "under a tree", "in a garden", "on a boat",  "in the city", "by the fire"};

  Rng rng(options.seed);
  auto pick = [&](const auto& words) { return std::string(words[rng.below(words.size())]); };

  SourceManifest m;
  for (std::size_t s = 0; s < options.sequences; ++s) {
    SourceSequence seq;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04zu", s + 1);
    seq.sequence_id = id;
    for (std::size_t i = 0; i < options.length; ++i) {
      SourceItem item;
      const auto adjective = pick(adjectives);
      const auto subject = pick(subjects);
      const auto action = pick(actions);
      const auto place = pick(places);
      item.caption = "a " + adjective + " " + subject + " " + action + " " + place;
      char uri[64];
      std::snprintf(uri, sizeof uri, "synthetic://%s/%02zu.jpg", id, i + 1);
      item.uri = uri;
      seq.items.push_back(std::move(item));
    }
    m.sequences.push_back(std::move(seq));
  }
  return m;
}

std::filesystem::path bundled_manifest_path() { return data_dir() / "manifests" / "synthetic.jsonl"; }

}  // namespace assembly
