#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "assembly/generator.hpp"
#include "assembly/prompt_io.hpp"

namespace assembly {

/// True iff both timelines have the same length and the same ids in order.
bool exact_match(std::span<const AssetId> pred, std::span<const AssetId> gold);

enum class FailureReason { Mismatch, ParseError, LengthMismatch };
std::string_view reason_name(FailureReason r);

struct Failure {
  std::string sample_id;
  FailureReason reason;
  std::string detail;
  friend bool operator==(const Failure&, const Failure&) = default;
};

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;
  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  friend bool operator==(const Tally&, const Tally&) = default;
};

struct EvalReport {
  Tally overall;
  std::map<std::string, Tally> per_cue;   // "positional", "semantic"
  std::map<std::string, Tally> per_task;  // Sample::task_label()
  std::vector<Failure> failures;          // sorted by sample_id

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Scores every dataset sample. A sample without a response counts as a
/// parse_error. Throws Error(Eval) when a response names an unknown sample.
EvalReport score(const std::map<std::string, std::string>& predictions, const std::vector<Sample>& dataset,
                 Strictness strictness = Strictness::Lenient);

nlohmann::ordered_json report_to_json(const EvalReport& report);
/// bucket,correct,total,accuracy rows: overall, cues, tasks.
std::string report_to_csv(const EvalReport& report);
/// Positional/Semantic rows against Ins./Rem./Repl./Swap/Avg. columns in
/// percent, then Overall and any compositional buckets.
std::string render_table(const EvalReport& report);

/// Predictions from JSONL lines {"sample_id", "response"}, or from a
/// directory holding one <sample_id>.txt (or .json) file per sample.
std::map<std::string, std::string> load_predictions(const std::filesystem::path& path);

// Task routing ----------------------------------------------------------------

inline constexpr std::size_t kTaskCount = 8;

template <class T>
using TaskMatrix = std::array<std::array<T, kTaskCount>, kTaskCount>;

/// Tasks are indexed by TaskKind::index(): positional insert, remove,
/// replace, swap, then the semantic four.
struct RoutingSpec {
  /// accuracy[model][task]; unknown entries stay empty and must not carry
  /// routing weight.
  TaskMatrix<std::optional<double>> accuracy{};
  /// routing[task][model]; each row sums to 1.
  TaskMatrix<double> routing{};

  /// Throws Error(Spec).
  void validate() const;

  /// {"accuracy": matrix | {"diagonal": [...]}, "routing": matrix | "oracle" | "uniform"}
  static RoutingSpec from_json(const nlohmann::json& doc);
  static RoutingSpec load(const std::filesystem::path& path);
};

TaskMatrix<double> oracle_routing();
TaskMatrix<double> uniform_routing();

struct Composite {
  std::array<double, kTaskCount> per_task{};
  double average = 0;
};

/// composite[t] = sum over m of routing[t][m] * accuracy[m][t].
Composite route_composite(const RoutingSpec& spec);

struct Simulation {
  std::size_t trials = 0;
  std::array<double, kTaskCount> per_task{};
  double average = 0;
  /// Binomial standard error of each estimate around the closed form.
  std::array<double, kTaskCount> sigma{};
  double average_sigma = 0;
};

/// Each trial routes every task to a model drawn from its routing row and
/// records a Bernoulli success with that model's accuracy.
Simulation simulate_routing(const RoutingSpec& spec, std::size_t trials, std::uint64_t seed);

}  // namespace assembly
