#include "assembly/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace assembly {

bool exact_match(std::span<const AssetId> pred, std::span<const AssetId> gold) {
  return std::equal(pred.begin(), pred.end(), gold.begin(), gold.end());
}

std::string_view reason_name(FailureReason r) {
  switch (r) {
    case FailureReason::Mismatch:
      return "mismatch";
    case FailureReason::ParseError:
      return "parse_error";
    case FailureReason::LengthMismatch:
      return "length_mismatch";
  }
  return "unknown";
}

EvalReport score(const std::map<std::string, std::string>& predictions, const std::vector<Sample>& dataset,
                 Strictness strictness) {
  std::map<std::string_view, const Sample*> by_id;
  for (const auto& s : dataset) by_id.emplace(s.sample_id, &s);
  for (const auto& [id, _] : predictions) {
    if (!by_id.contains(id)) throw Error(ErrorKind::Eval, "prediction for unknown sample '" + id + "'");
  }

  EvalReport report;
  for (const auto& [id, sample] : by_id) {
    const auto cue = std::string(cue_name(sample->cue()));
    const auto task = sample->task_label();
    bool ok = false;
    const auto it = predictions.find(sample->sample_id);
    if (it == predictions.end()) {
      report.failures.push_back({sample->sample_id, FailureReason::ParseError, "no response"});
    } else {
      try {
        const auto pred = parse_timeline_output(it->second, strictness);
        if (exact_match(pred, sample->output)) {
          ok = true;
        } else if (pred.size() != sample->output.size()) {
          report.failures.push_back({sample->sample_id, FailureReason::LengthMismatch,
                                     "predicted " + std::to_string(pred.size()) + " entries, expected " +
                                         std::to_string(sample->output.size())});
        } else {
          report.failures.push_back({sample->sample_id, FailureReason::Mismatch, "timeline differs from gold"});
        }
      } catch (const Error& e) {
        report.failures.push_back(
            {sample->sample_id, FailureReason::ParseError, std::string(kind_name(e.kind())) + ": " + e.what()});
      }
    }
    for (Tally* t : {&report.overall, &report.per_cue[cue], &report.per_task[task]}) {
      ++t->total;
      if (ok) ++t->correct;
    }
  }
  return report;
}

namespace {

nlohmann::ordered_json tally_json(const Tally& t) {
  return {{"correct", t.correct}, {"total", t.total}, {"accuracy", t.fraction()}};
}

std::string percent(const Tally& t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * t.fraction());
  return buf;
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json doc;
  doc["overall"] = r.overall.fraction();
  nlohmann::ordered_json cues = nlohmann::ordered_json::object();
  for (const auto& [k, t] : r.per_cue) cues[k] = t.fraction();
  doc["per_cue"] = std::move(cues);
  nlohmann::ordered_json tasks = nlohmann::ordered_json::object();
  for (const auto& [k, t] : r.per_task) tasks[k] = t.fraction();
  doc["per_task"] = std::move(tasks);
  nlohmann::ordered_json counts;
  counts["overall"] = tally_json(r.overall);
  for (const auto& [k, t] : r.per_cue) counts["per_cue"][k] = tally_json(t);
  for (const auto& [k, t] : r.per_task) counts["per_task"][k] = tally_json(t);
  doc["counts"] = std::move(counts);
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"sample_id", f.sample_id}, {"reason", reason_name(f.reason)}, {"detail", f.detail}});
  }
  doc["failures"] = std::move(failures);
  return doc;
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  char buf[64];
  auto row = [&](const std::string& bucket, const Tally& t) {
    std::snprintf(buf, sizeof buf, "%.6f", t.fraction());
    out << bucket << ',' << t.correct << ',' << t.total << ',' << buf << '\n';
  };
  out << "bucket,correct,total,accuracy\n";
  row("overall", r.overall);
  for (const auto& [k, t] : r.per_cue) row(k, t);
  for (const auto& [k, t] : r.per_task) row(k, t);
  return out.str();
}

std::string render_table(const EvalReport& r) {
  static constexpr std::array<std::string_view, 4> heads = {"Ins.", "Rem.", "Repl.", "Swap"};
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-12s", "");
  out << buf;
  for (auto h : heads) {
    std::snprintf(buf, sizeof buf, "%8s", std::string(h).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%8s\n", "Avg.");
  out << buf;
  for (auto cue : {CueKind::Positional, CueKind::Semantic}) {
    const auto cue_label = std::string(cue_name(cue));
    std::string title = cue_label;
    title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
    std::snprintf(buf, sizeof buf, "%-12s", title.c_str());
    out << buf;
    for (auto op : {OpKind::Insert, OpKind::Remove, OpKind::Replace, OpKind::Swap}) {
      const auto it = r.per_task.find(TaskKind{op, cue}.label());
      std::snprintf(buf, sizeof buf, "%8s", it == r.per_task.end() ? "-" : percent(it->second).c_str());
      out << buf;
    }
    const auto it = r.per_cue.find(cue_label);
    std::snprintf(buf, sizeof buf, "%8s\n", it == r.per_cue.end() ? "-" : percent(it->second).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s%8s\n", "Overall", percent(r.overall).c_str());
  out << buf;
  for (const auto& [k, t] : r.per_task) {
    if (k.find('+') == std::string::npos) continue;
    std::snprintf(buf, sizeof buf, "  %-28s %6s  (%zu/%zu)\n", k.c_str(), percent(t).c_str(), t.correct, t.total);
    out << buf;
  }
  return out.str();
}

std::map<std::string, std::string> load_predictions(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> out;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = entry.path().extension().string();
      if (ext != ".txt" && ext != ".json") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      if (!in) throw Error(ErrorKind::Io, "cannot read " + entry.path().string());
      std::ostringstream text;
      text << in.rdbuf();
      out[entry.path().stem().string()] = text.str();
    }
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read predictions " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      const auto id = doc.at("sample_id").get<std::string>();
      if (!out.emplace(id, doc.at("response").get<std::string>()).second) {
        throw Error(ErrorKind::Schema, "duplicate prediction for " + id);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Schema, "predictions line " + std::to_string(lineno) + ": " + e.what()).at_line(lineno);
    } catch (const Error& e) {
      throw Error(ErrorKind::Schema, "predictions line " + std::to_string(lineno) + ": " + e.what()).at_line(lineno);
    }
  }
  return out;
}

}  // namespace assembly
