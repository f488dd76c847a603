#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "assembly/core.hpp"
#include "assembly/manifest.hpp"
#include "assembly/templates.hpp"

namespace assembly {

/// Inclusive timeline-length range; a fixed length has min == max.
struct LengthRange {
  std::size_t min = 5;
  std::size_t max = 5;
  bool fixed() const noexcept { return min == max; }
  friend bool operator==(const LengthRange&, const LengthRange&) = default;
};

/// "5" or "2:19". Throws Error(Generation).
LengthRange parse_length_range(std::string_view text);

struct GenConfig {
  std::size_t collection_size = 20;
  LengthRange length{};
  std::size_t samples_per_task = 80;
  std::uint64_t seed = 0;
  bool compositional = false;
  Split split = Split::Test;
  std::size_t max_retries = 20;
  unsigned threads = 1;

  /// Throws Error(Generation) describing the first violated constraint.
  void validate() const;
};

struct SampleMeta {
  std::uint64_t seed = 0;
  std::vector<std::string> template_ids;
  std::size_t length = 0;  // length of the gold timeline
  std::string sequence_id;
  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

/// One benchmark item. `tasks` has one entry, or two for a compositional
/// instruction (executed in order).
struct Sample {
  std::string sample_id;
  std::vector<TaskKind> tasks;
  Collection collection;
  Timeline input;
  std::string instruction;
  Timeline output;
  SampleMeta meta;

  bool compositional() const noexcept { return tasks.size() > 1; }
  CueKind cue() const { return tasks.front().cue; }
  /// "swap" or "insert+remove".
  std::string op_label() const;
  /// "swap/positional" or "insert+remove/semantic"; used as report bucket.
  std::string task_label() const;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Builds one sample for `task`: a natural source subsequence is the gold
/// output and the input is a corrupted copy that the rendered instruction
/// reverts. Throws Error(Generation) once max_retries attempts fail the
/// caption-uniqueness check.
Sample make_sample(const SourceManifest& manifest, TaskKind task, const GenConfig& cfg, const TemplateSet& templates,
                   Rng& rng);

/// Two semantic operations in one instruction; `second` is applied to the
/// timeline produced by `first`.
Sample make_compositional(const SourceManifest& manifest, OpKind first, OpKind second, const GenConfig& cfg,
                          const TemplateSet& templates, Rng& rng);

struct GenSummary {
  std::map<std::string, std::size_t> per_task;
  std::size_t skipped = 0;
  std::size_t total() const;
};

struct Dataset {
  std::vector<Sample> samples;
  GenSummary summary;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// samples_per_task samples for every task kind (or every ordered pair of
/// semantic operations in compositional mode). Each sample draws from its
/// own random source derived from (seed, task, index), so the result does
/// not depend on cfg.threads.
Dataset make_dataset(const SourceManifest& manifest, const GenConfig& cfg, const TemplateSet& templates,
                     const ProgressFn& progress = {});

/// Task buckets make_dataset iterates over, in output order.
std::vector<std::vector<TaskKind>> dataset_tasks(bool compositional);

}  // namespace assembly
