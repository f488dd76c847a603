#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "assembly/generator.hpp"

namespace assembly {

enum class PromptMode { Placeholder, Caption };

PromptMode parse_prompt_mode(std::string_view name);

inline constexpr std::string_view kVisualPlaceholder = "<VisualHere>";
inline constexpr std::string_view kSystemLine =
    "You are presented with a collection of images, you have to modify the timeline accordingly, to complete the "
    "instruction you are given.";

/// Model input for one sample: system line, collection records, current
/// timeline and instruction. JSON blocks use 4-space indentation with keys
/// in insertion order; output ends with a newline. In placeholder mode each
/// record's "clip" is the visual placeholder, in caption mode the caption.
std::string build_prompt(const Sample& sample, PromptMode mode);

/// {"1": {"clip_id": "NNNN"}, ...} with 4-space indentation.
std::string serialize_timeline(std::span<const AssetId> timeline);

/// k placeholders give k + 1 segments; joining them with the placeholder
/// restores the prompt.
std::vector<std::string> split_on_placeholder(std::string_view prompt);
std::string join_on_placeholder(const std::vector<std::string>& segments);

enum class Strictness { Strict, Lenient };

/// Reads a predicted timeline out of a model response.
///
/// Strict: the whole text must be a JSON object whose keys are "1".."Q" and
/// whose values carry a 4-digit string clip_id. Lenient: the first balanced
/// {...} block is taken from the text; single quotes, bare keys and bare
/// numeric ids are accepted (ids are zero padded), then the strict rules
/// apply. Throws NoTimelineFound, NonConsecutiveKeys or MissingClipId.
std::vector<AssetId> parse_timeline_output(std::string_view text, Strictness strictness);

nlohmann::ordered_json sample_to_json(const Sample& sample);
/// Throws Error(Schema).
Sample sample_from_json(const nlohmann::json& doc);

void write_dataset(const std::vector<Sample>& samples, std::ostream& out);
void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path);
/// Throws Error(Schema) naming the offending line, Error(Io) if unreadable.
std::vector<Sample> read_dataset(std::istream& in);
std::vector<Sample> read_dataset(const std::filesystem::path& path);

}  // namespace assembly
