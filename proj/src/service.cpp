#include "assembly/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <httplib.h>

#include "assembly/prompt_io.hpp"

namespace assembly {

using json = nlohmann::ordered_json;

namespace {

json timeline_json(const Timeline& t) {
  json arr = json::array();
  for (const auto& id : t) arr.push_back(id.str());
  return arr;
}

json collection_json(const Collection& c) {
  json arr = json::array();
  for (const auto& a : c.assets()) {
    arr.push_back({{"clip_id", a.id.str()}, {"caption", a.caption}, {"uri", a.uri ? json(*a.uri) : json(nullptr)}});
  }
  return arr;
}

Service::Response fail(int status, std::string_view kind, const std::string& message, const json& detail = json::object()) {
  return {status, Service::error_body(kind, message, detail)};
}

Service::Response not_found(const std::string& what) { return fail(404, "NotFound", what); }

json error_detail(const Error& e) {
  json d = json::object();
  if (e.op_index) d["op_index"] = *e.op_index;
  if (e.offset) d["offset"] = *e.offset;
  if (e.line) d["line"] = *e.line;
  return d;
}

Timeline timeline_from_json(const json& arr, const Collection& c) {
  if (!arr.is_array()) throw Error(ErrorKind::Schema, "timeline must be an array");
  Timeline t;
  for (const auto& v : arr) {
    if (v.is_number_unsigned()) {
      const auto i = v.get<std::size_t>();
      if (i >= c.size()) throw Error(ErrorKind::Schema, "timeline index " + std::to_string(i) + " outside collection");
      t.push_back(c.at(i).id);
    } else if (v.is_string()) {
      AssetId id(v.get<std::string>());
      if (!c.contains(id)) throw Error(ErrorKind::Schema, "timeline id " + id.str() + " not in collection");
      t.push_back(std::move(id));
    } else {
      throw Error(ErrorKind::Schema, "timeline entries are clip ids or collection indices");
    }
  }
  return t;
}

/// Records need a caption; clip_id is either given on every record or on
/// none, in which case ids are assigned from `seed`.
Collection collection_from_json(const json& arr, std::uint64_t seed) {
  if (!arr.is_array()) throw Error(ErrorKind::Schema, "collection must be an array");
  std::size_t with_id = 0;
  for (const auto& r : arr) {
    if (!r.is_object()) throw Error(ErrorKind::Schema, "collection records must be objects");
    if (r.contains("clip_id")) ++with_id;
  }
  if (with_id != 0 && with_id != arr.size()) {
    throw Error(ErrorKind::Schema, "give clip_id on every collection record or on none");
  }
  std::vector<AssetId> ids;
  if (with_id == 0) {
    Rng rng(seed);
    ids = assign_ids(arr.size(), rng);
  }
  std::vector<Asset> assets;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& r = arr[i];
    if (!r.contains("caption") || !r["caption"].is_string()) {
      throw Error(ErrorKind::Schema, "collection record " + std::to_string(i) + " needs a caption");
    }
    Asset a{with_id ? AssetId(r["clip_id"].get<std::string>()) : ids[i], r["caption"].get<std::string>(), std::nullopt};
    if (r.contains("uri") && r["uri"].is_string()) a.uri = r["uri"].get<std::string>();
    assets.push_back(std::move(a));
  }
  return Collection(std::move(assets));
}

std::vector<std::size_t> changed_positions(const Timeline& before, const Timeline& after) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (i >= before.size() || before[i] != after[i]) out.push_back(i + 1);
  }
  return out;
}

GenConfig config_from_json(const json& body) {
  GenConfig cfg;
  cfg.collection_size = body.value("collection_size", cfg.collection_size);
  cfg.samples_per_task = body.value("per_task", cfg.samples_per_task);
  cfg.seed = body.value("seed", cfg.seed);
  cfg.compositional = body.value("compositional", cfg.compositional);
  cfg.threads = body.value("threads", cfg.threads);
  if (body.contains("split")) cfg.split = parse_split(body["split"].get<std::string>());
  if (body.contains("length")) {
    const auto& l = body["length"];
    cfg.length = l.is_string() ? parse_length_range(l.get<std::string>()) : LengthRange{l.get<std::size_t>(), l.get<std::size_t>()};
  }
  if (body.contains("length_range")) {
    const auto& l = body["length_range"];
    if (l.is_array() && l.size() == 2) {
      cfg.length = {l[0].get<std::size_t>(), l[1].get<std::size_t>()};
    } else {
      cfg.length = parse_length_range(l.get<std::string>());
    }
  }
  cfg.validate();
  return cfg;
}

json config_json(const GenConfig& cfg) {
  return {{"collection_size", cfg.collection_size}, {"length_range", {cfg.length.min, cfg.length.max}},
          {"per_task", cfg.samples_per_task},       {"seed", cfg.seed},
          {"compositional", cfg.compositional},     {"split", split_name(cfg.split)}};
}

json dataset_descriptor(const std::string& id, const std::vector<Sample>& samples) {
  json per_task = json::object();
  for (const auto& s : samples) {
    auto& n = per_task[s.task_label()];
    n = n.is_null() ? 1 : n.get<std::size_t>() + 1;
  }
  return {{"dataset_id", id}, {"samples", samples.size()}, {"per_task", per_task}};
}

}  // namespace

bool Session::replay_consistent() const {
  Timeline t = initial;
  for (const auto& h : history) {
    try {
      t = assembly::execute(t, collection, h.instruction);
    } catch (const Error&) {
      return false;
    }
    if (t != h.timeline) return false;
  }
  return t == current;
}

json Session::to_json() const {
  json history_json = json::array();
  for (const auto& h : history) history_json.push_back({{"instruction", h.instruction}, {"timeline", timeline_json(h.timeline)}});
  json doc = {{"session_id", id},
              {"collection", collection_json(collection)},
              {"timeline", timeline_json(current)},
              {"initial_timeline", timeline_json(initial)},
              {"history", std::move(history_json)},
              {"undo_depth", history.size()}};
  doc["dataset_id"] = dataset_id ? json(*dataset_id) : json(nullptr);
  doc["sample_id"] = sample_id ? json(*sample_id) : json(nullptr);
  return doc;
}

Service::Service(TemplateSet templates, Options options) : templates_(std::move(templates)), options_(std::move(options)) {
  if (options_.snapshot && std::filesystem::exists(*options_.snapshot)) {
    std::ifstream in(*options_.snapshot, std::ios::binary);
    auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::Schema, "snapshot " + options_.snapshot->string() + " is not JSON");
    load_snapshot(doc);
  }
}

json Service::error_body(std::string_view kind, const std::string& message, const json& detail) {
  return {{"kind", kind}, {"message", message}, {"detail", detail}};
}

void Service::add_dataset(const std::string& id, std::vector<Sample> samples) {
  auto ptr = std::make_shared<const std::vector<Sample>>(std::move(samples));
  std::unique_lock lock(datasets_mu_);
  datasets_[id] = std::move(ptr);
}

std::shared_ptr<Session> Service::find_session(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<const std::vector<Sample>> Service::find_dataset(const std::string& id) const {
  std::shared_lock lock(datasets_mu_);
  const auto it = datasets_.find(id);
  return it == datasets_.end() ? nullptr : it->second;
}

std::string Service::next_session_id() { return "s" + std::to_string(++session_counter_); }

Service::Response Service::create_session(const json& body) {
  auto session = std::make_shared<Session>();
  json sample_info = nullptr;
  try {
    if (!body.is_object()) throw Error(ErrorKind::Schema, "request body must be an object");
    if (body.contains("dataset_id") || body.contains("sample_id")) {
      const auto ds_id = body.at("dataset_id").get<std::string>();
      const auto sid = body.at("sample_id").get<std::string>();
      const auto ds = find_dataset(ds_id);
      if (!ds) return not_found("unknown dataset '" + ds_id + "'");
      const auto it = std::find_if(ds->begin(), ds->end(), [&](const Sample& s) { return s.sample_id == sid; });
      if (it == ds->end()) return not_found("unknown sample '" + sid + "' in dataset '" + ds_id + "'");
      session->collection = it->collection;
      session->initial = it->input;
      session->dataset_id = ds_id;
      session->sample_id = sid;
      sample_info = {{"sample_id", it->sample_id},
                     {"task", it->op_label()},
                     {"cue", cue_name(it->cue())},
                     {"instruction", it->instruction},
                     {"output_timeline", timeline_json(it->output)}};
    } else {
      session->collection = collection_from_json(body.at("collection"), body.value("seed", std::uint64_t{0}));
      session->initial = body.contains("timeline") ? timeline_from_json(body["timeline"], session->collection) : Timeline{};
    }
  } catch (const json::exception& e) {
    return fail(400, kind_name(ErrorKind::Schema), e.what());
  } catch (const Error& e) {
    return fail(400, kind_name(e.kind()), e.what());
  }
  session->current = session->initial;
  session->id = next_session_id();
  json out = session->to_json();
  out["sample"] = sample_info;
  {
    std::unique_lock lock(sessions_mu_);
    sessions_[session->id] = session;
  }
  persist();
  return {201, out};
}

Service::Response Service::get_session(const std::string& id) const {
  const auto s = find_session(id);
  if (!s) return not_found("unknown session '" + id + "'");
  std::lock_guard lock(s->mu);
  return {200, s->to_json()};
}

Service::Response Service::execute(const std::string& id, const json& body) {
  const auto s = find_session(id);
  if (!s) return not_found("unknown session '" + id + "'");
  if (!body.is_object() || !body.contains("instruction") || !body["instruction"].is_string()) {
    return fail(400, kind_name(ErrorKind::Schema), "body needs an \"instruction\" string");
  }
  const auto text = body["instruction"].get<std::string>();
  json out;
  {
    std::lock_guard lock(s->mu);
    try {
      const auto parsed = parse_instruction(text);
      const auto next = assembly::execute(s->current, s->collection, parsed.instruction);
      json ops = json::array();
      for (const auto& op : parsed.instruction.ops) ops.push_back(json(to_json(op)));
      json spans = json::array();
      for (const auto& sp : parsed.spans) spans.push_back({{"begin", sp.begin}, {"end", sp.end}});
      out = {{"timeline", timeline_json(next)},
             {"previous_timeline", timeline_json(s->current)},
             {"ops", std::move(ops)},
             {"spans", std::move(spans)},
             {"changed_positions", changed_positions(s->current, next)}};
      s->history.push_back({text, next});
      s->current = next;
      out["history_length"] = s->history.size();
    } catch (const Error& e) {
      json err = error_body(kind_name(e.kind()), e.what(), error_detail(e));
      err["timeline"] = timeline_json(s->current);
      return {422, err};
    }
#ifndef NDEBUG
    if (!s->replay_consistent()) throw std::logic_error("session " + id + " history no longer replays");
#endif
  }
  persist();
  return {200, out};
}

Service::Response Service::undo(const std::string& id) {
  const auto s = find_session(id);
  if (!s) return not_found("unknown session '" + id + "'");
  json out;
  {
    std::lock_guard lock(s->mu);
    if (s->history.empty()) {
      json err = error_body("EmptyHistory", "nothing to undo");
      err["timeline"] = timeline_json(s->current);
      return {409, err};
    }
    s->history.pop_back();
    s->current = s->history.empty() ? s->initial : s->history.back().timeline;
#ifndef NDEBUG
    if (!s->replay_consistent()) throw std::logic_error("session " + id + " history no longer replays");
#endif
    out = {{"timeline", timeline_json(s->current)}, {"history_length", s->history.size()}};
  }
  persist();
  return {200, out};
}

Service::Response Service::generate(const json& body, const ProgressFn& progress) {
  GenConfig cfg;
  SourceManifest manifest;
  try {
    if (!body.is_object()) throw Error(ErrorKind::Schema, "request body must be an object");
    cfg = config_from_json(body);
    if (!body.contains("threads")) cfg.threads = options_.threads;
    std::filesystem::path path = options_.manifest.empty() ? bundled_manifest_path() : options_.manifest;
    if (body.contains("manifest")) path = body["manifest"].get<std::string>();
    manifest = ingest_manifest(path);
  } catch (const json::exception& e) {
    return fail(400, kind_name(ErrorKind::Schema), e.what());
  } catch (const Error& e) {
    return fail(400, kind_name(e.kind()), e.what());
  }
  Dataset ds;
  try {
    ds = make_dataset(manifest, cfg, templates_, progress);
  } catch (const Error& e) {
    return fail(422, kind_name(e.kind()), e.what());
  }
  const std::string id = body.contains("dataset_id") ? body["dataset_id"].get<std::string>()
                                                     : "ds" + std::to_string(++dataset_counter_);
  json out = dataset_descriptor(id, ds.samples);
  out["skipped"] = ds.summary.skipped;
  out["config"] = config_json(cfg);
  add_dataset(id, std::move(ds.samples));
  return {201, out};
}

Service::Response Service::evaluate(const json& body) const {
  if (!body.is_object() || !body.contains("dataset_id")) {
    return fail(400, kind_name(ErrorKind::Schema), "body needs \"dataset_id\" and \"predictions\"");
  }
  const auto ds_id = body["dataset_id"].get<std::string>();
  const auto ds = find_dataset(ds_id);
  if (!ds) return not_found("unknown dataset '" + ds_id + "'");
  std::map<std::string, std::string> predictions;
  try {
    const auto& p = body.at("predictions");
    if (p.is_object()) {
      for (const auto& [k, v] : p.items()) predictions[k] = v.get<std::string>();
    } else {
      for (const auto& r : p) predictions[r.at("sample_id").get<std::string>()] = r.at("response").get<std::string>();
    }
  } catch (const json::exception& e) {
    return fail(400, kind_name(ErrorKind::Schema), e.what());
  }
  try {
    const auto strict = body.value("strict", false);
    const auto report = score(predictions, *ds, strict ? Strictness::Strict : Strictness::Lenient);
    json out = report_to_json(report);
    out["table"] = render_table(report);
    return {200, out};
  } catch (const Error& e) {
    return fail(400, kind_name(e.kind()), e.what());
  }
}

Service::Response Service::list_datasets() const {
  json arr = json::array();
  std::shared_lock lock(datasets_mu_);
  for (const auto& [id, ds] : datasets_) arr.push_back(dataset_descriptor(id, *ds));
  return {200, {{"datasets", arr}}};
}

Service::Response Service::dataset_samples(const std::string& id, std::size_t offset, std::size_t limit) const {
  const auto ds = find_dataset(id);
  if (!ds) return not_found("unknown dataset '" + id + "'");
  json arr = json::array();
  for (std::size_t i = offset; i < ds->size() && i - offset < limit; ++i) arr.push_back(sample_to_json((*ds)[i]));
  return {200, {{"dataset_id", id}, {"total", ds->size()}, {"offset", offset}, {"samples", arr}}};
}

Service::Response Service::dataset_sample(const std::string& id, const std::string& sample_id) const {
  const auto ds = find_dataset(id);
  if (!ds) return not_found("unknown dataset '" + id + "'");
  for (const auto& s : *ds) {
    if (s.sample_id == sample_id) return {200, sample_to_json(s)};
  }
  return not_found("unknown sample '" + sample_id + "'");
}

Service::Response Service::templates() const { return {200, {{"templates", json(templates_.to_json())}}}; }

json Service::snapshot() const {
  json arr = json::array();
  std::shared_lock lock(sessions_mu_);
  for (const auto& [id, s] : sessions_) {
    std::lock_guard slock(s->mu);
    arr.push_back(s->to_json());
  }
  return {{"sessions", arr}, {"session_counter", session_counter_.load()}};
}

void Service::load_snapshot(const json& doc) {
  try {
    std::map<std::string, std::shared_ptr<Session>> loaded;
    for (const auto& r : doc.at("sessions")) {
      auto s = std::make_shared<Session>();
      s->id = r.at("session_id").get<std::string>();
      s->collection = collection_from_json(r.at("collection"), 0);
      s->initial = timeline_from_json(r.at("initial_timeline"), s->collection);
      s->current = timeline_from_json(r.at("timeline"), s->collection);
      for (const auto& h : r.at("history")) {
        s->history.push_back({h.at("instruction").get<std::string>(), timeline_from_json(h.at("timeline"), s->collection)});
      }
      if (r.contains("dataset_id") && r["dataset_id"].is_string()) s->dataset_id = r["dataset_id"].get<std::string>();
      if (r.contains("sample_id") && r["sample_id"].is_string()) s->sample_id = r["sample_id"].get<std::string>();
      if (!s->replay_consistent()) throw Error(ErrorKind::Schema, "session " + s->id + " history does not replay");
      loaded[s->id] = std::move(s);
    }
    std::unique_lock lock(sessions_mu_);
    sessions_ = std::move(loaded);
    session_counter_ = doc.value("session_counter", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("snapshot: ") + e.what());
  }
}

void Service::persist() const {
  if (!options_.snapshot) return;
  const auto doc = snapshot();
  std::lock_guard lock(persist_mu_);
  const auto tmp = options_.snapshot->string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write snapshot " + tmp);
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, *options_.snapshot);
}

void Service::bind(httplib::Server& server) {
  server.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  // Empty bodies count as {}; anything else must parse.
  auto with_body = [reply](auto handler) {
    return [reply, handler](const httplib::Request& req, httplib::Response& res) {
      json body = req.body.empty() ? json::object() : json::parse(req.body, nullptr, false);
      if (body.is_discarded()) {
        reply(res, {400, error_body(kind_name(ErrorKind::Schema), "request body is not valid JSON")});
        return;
      }
      reply(res, handler(req, body));
    };
  };

  server.Get("/health", [reply](const httplib::Request&, httplib::Response& res) { reply(res, {200, {{"ok", true}}}); });
  server.Post("/sessions", with_body([this](const httplib::Request&, const json& b) { return create_session(b); }));
  server.Get(R"(/sessions/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_session(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/execute)",
              with_body([this](const httplib::Request& req, const json& b) { return execute(req.matches[1], b); }));
  server.Post(R"(/sessions/([^/]+)/undo)",
              with_body([this](const httplib::Request& req, const json&) { return undo(req.matches[1]); }));
  server.Post("/generate", [this, reply](const httplib::Request& req, httplib::Response& res) {
    json body = req.body.empty() ? json::object() : json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      reply(res, {400, error_body(kind_name(ErrorKind::Schema), "request body is not a JSON object")});
      return;
    }
    if (!body.value("stream", false)) {
      reply(res, generate(body));
      return;
    }
    // NDJSON: progress events, then one final "done" or "error" event.
    res.set_chunked_content_provider("application/x-ndjson", [this, body](std::size_t, httplib::DataSink& sink) {
      auto emit = [&](const json& event) {
        const auto line = event.dump() + "\n";
        sink.write(line.data(), line.size());
      };
      std::size_t last = 0;
      const auto r = generate(body, [&](std::size_t done, std::size_t total) {
        if (done == total || done - last >= std::max<std::size_t>(1, total / 50)) {
          last = done;
          emit({{"event", "progress"}, {"done", done}, {"total", total}});
        }
      });
      emit({{"event", r.status < 300 ? "done" : "error"}, {"status", r.status}, {"body", r.body}});
      sink.done();
      return true;
    });
  });
  server.Post("/evaluate", with_body([this](const httplib::Request&, const json& b) { return evaluate(b); }));
  server.Get("/datasets", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, list_datasets()); });
  server.Get(R"(/datasets/([^/]+)/samples)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    auto num = [&](const char* key, std::size_t fallback) {
      if (!req.has_param(key)) return fallback;
      try {
        return static_cast<std::size_t>(std::stoull(req.get_param_value(key)));
      } catch (const std::exception&) {
        return fallback;
      }
    };
    reply(res, dataset_samples(req.matches[1], num("offset", 0), num("limit", 1000)));
  });
  server.Get(R"(/datasets/([^/]+)/samples/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, dataset_sample(req.matches[1], req.matches[2]));
  });
  server.Get("/templates", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, templates()); });

  server.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, {500, error_body("InternalError", what)});
  });
}

int default_port(int fallback) {
  if (const char* env = std::getenv("ASSEMBLY_BENCH_PORT"); env && *env) {
    try {
      const int port = std::stoi(env);
      if (port > 0 && port < 65536) return port;
    } catch (const std::exception&) {
    }
  }
  return fallback;
}

}  // namespace assembly
