#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "assembly/core.hpp"

namespace assembly {

enum class Split { Train, Val, Test };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

inline constexpr std::string_view kElement = "element";
inline constexpr std::string_view kElementB = "element_b";
inline constexpr std::string_view kPosition = "position";
inline constexpr std::string_view kPositionB = "position_b";

/// Instruction template for one task kind. Placeholders are `{element}`,
/// `{element_b}`, `{position}` and `{position_b}`; element slots carry an id
/// (positional cue) or a caption (semantic cue), position slots carry a
/// position word.
struct Template {
  std::string id;
  TaskKind task;
  Split split;
  std::string pattern;

  /// Placeholder names in order of appearance. Throws TemplateError on an
  /// unterminated or unknown placeholder.
  std::vector<std::string> placeholders() const;
  bool has(std::string_view placeholder) const;
};

/// Checks the pattern against the placeholder signatures allowed for its
/// task kind. Throws TemplateError.
void validate_template(const Template& t);

using CueValues = std::map<std::string, std::string, std::less<>>;

/// Substitutes cue values into the pattern. Element values of semantic
/// templates are wrapped in double quotes.
std::string render(const Template& t, const CueValues& cues);

class TemplateSet {
 public:
  TemplateSet() = default;
  /// Validates every template individually (placeholders, unique ids).
  explicit TemplateSet(std::vector<Template> templates);

  static TemplateSet from_json(const nlohmann::json& doc);
  /// Loads a corpus file and checks full coverage and split disjointness.
  static TemplateSet load(const std::filesystem::path& path);

  const std::vector<Template>& templates() const noexcept { return templates_; }
  std::vector<const Template*> bucket(TaskKind task, Split split) const;
  const Template* find(std::string_view id) const;

  /// Problems with coverage (a missing task/split bucket) or with patterns
  /// shared between train and val/test. Empty when the corpus is usable.
  std::vector<std::string> coverage_problems() const;

  nlohmann::json to_json() const;

 private:
  std::vector<Template> templates_;
};

/// Uniform choice within the (task, split) bucket. Throws TemplateError on
/// an empty bucket.
const Template& sample_template(const TemplateSet& set, TaskKind task, Split split, Rng& rng);

/// As above, restricted to templates accepted by `eligible`.
const Template& sample_template(const TemplateSet& set, TaskKind task, Split split, Rng& rng,
                                const std::function<bool(const Template&)>& eligible);

/// "first".."twentieth" for 1..20, "21st"-style numerals above that.
std::string ordinal_word(std::int64_t index);

/// Inverse of ordinal_word, case-insensitive; also accepts numeric
/// ordinals such as "3rd".
std::optional<std::int64_t> ordinal_value(std::string_view word);

/// Default corpus location: $ASSEMBLY_BENCH_TEMPLATES if set, else the
/// shipped data file.
std::filesystem::path default_template_path();
std::filesystem::path data_dir();

}  // namespace assembly
