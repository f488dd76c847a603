#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace assembly {

struct SourceItem {
  std::optional<std::string> uri;
  std::string caption;
  friend bool operator==(const SourceItem&, const SourceItem&) = default;
};

/// A natural sequence of visual assets (a story or the shots of a video).
struct SourceSequence {
  std::string sequence_id;
  std::vector<SourceItem> items;
  friend bool operator==(const SourceSequence&, const SourceSequence&) = default;
};

struct SourceManifest {
  std::vector<SourceSequence> sequences;
  /// Sequences dropped during ingestion (fewer than two items or an empty
  /// caption).
  std::size_t rejected = 0;
};

/// Accepts a JSON document (array of sequences, or {"sequences": [...]}) or
/// JSONL with one sequence per line. Throws Error(Parse) with the line
/// number for malformed input and Error(Parse) for a missing file.
SourceManifest ingest_manifest(const std::filesystem::path& path);
SourceManifest parse_manifest(std::string_view text);

void write_manifest_jsonl(const SourceManifest& manifest, std::ostream& out);

struct SyntheticManifestOptions {
  std::size_t sequences = 160;
  std::size_t length = 24;
  std::uint64_t seed = 2024;
};

/// Procedurally captioned sequences for self-contained runs and tests.
SourceManifest synthetic_manifest(const SyntheticManifestOptions& options = {});

std::filesystem::path bundled_manifest_path();

}  // namespace assembly
