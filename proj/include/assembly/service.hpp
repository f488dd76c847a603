#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "assembly/evaluator.hpp"
#include "assembly/executor.hpp"
#include "assembly/generator.hpp"
#include "assembly/manifest.hpp"
#include "assembly/templates.hpp"

namespace httplib {
class Server;
}

namespace assembly {

struct HistoryEntry {
  std::string instruction;
  Timeline timeline;  // timeline after the instruction ran
};

/// One interactive editing session. Mutations go through the Service, which
/// holds `mu` for the duration of each one.
struct Session {
  std::string id;
  Collection collection;
  Timeline initial;
  Timeline current;
  std::vector<HistoryEntry> history;
  std::optional<std::string> dataset_id;
  std::optional<std::string> sample_id;
  mutable std::mutex mu;

  /// Replays the history from the initial timeline and compares each step.
  bool replay_consistent() const;
  nlohmann::ordered_json to_json() const;
};

/// JSON request handlers behind the HTTP API. Every handler returns a status
/// code and body; errors use the envelope {kind, message, detail}.
class Service {
 public:
  struct Response {
    int status = 200;
    nlohmann::ordered_json body;
  };

  struct Options {
    std::filesystem::path manifest;  // default for /generate; empty = bundled
    std::optional<std::filesystem::path> snapshot;
    std::string cors_origin = "*";
    unsigned threads = 1;
  };

  Service(TemplateSet templates, Options options);

  /// Makes a dataset available under `id` (replacing any previous one).
  void add_dataset(const std::string& id, std::vector<Sample> samples);

  Response create_session(const nlohmann::ordered_json& body);
  Response get_session(const std::string& id) const;
  Response execute(const std::string& id, const nlohmann::ordered_json& body);
  Response undo(const std::string& id);
  Response generate(const nlohmann::ordered_json& body, const ProgressFn& progress = {});
  Response evaluate(const nlohmann::ordered_json& body) const;
  Response list_datasets() const;
  Response dataset_samples(const std::string& id, std::size_t offset, std::size_t limit) const;
  Response dataset_sample(const std::string& id, const std::string& sample_id) const;
  Response templates() const;

  /// Sessions as JSON; load_snapshot restores them.
  nlohmann::ordered_json snapshot() const;
  void load_snapshot(const nlohmann::ordered_json& doc);

  /// Registers all routes plus CORS handling on `server`.
  void bind(httplib::Server& server);

  static nlohmann::ordered_json error_body(std::string_view kind, const std::string& message,
                                   const nlohmann::ordered_json& detail = nlohmann::ordered_json::object());

 private:
  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::shared_ptr<const std::vector<Sample>> find_dataset(const std::string& id) const;
  void persist() const;
  std::string next_session_id();

  TemplateSet templates_;
  Options options_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> session_counter_{0};

  mutable std::shared_mutex datasets_mu_;
  std::map<std::string, std::shared_ptr<const std::vector<Sample>>> datasets_;
  std::atomic<std::uint64_t> dataset_counter_{0};

  mutable std::mutex persist_mu_;
};

/// Port from ASSEMBLY_BENCH_PORT, else `fallback`.
int default_port(int fallback = 8765);

}  // namespace assembly
