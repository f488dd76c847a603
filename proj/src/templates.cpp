#include "assembly/templates.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>

#ifndef ASSEMBLY_BENCH_DATA_DIR
#define ASSEMBLY_BENCH_DATA_DIR "data"
#endif

namespace assembly {

namespace {

constexpr std::array<std::string_view, 20> kOrdinals = {
    "first",   "second",  "third",      "fourth",     "fifth",     "sixth",     "seventh",
    "eighth",  "ninth",   "tenth",      "eleventh",   "twelfth",   "thirteenth", "fourteenth",
    "fifteenth", "sixteenth", "seventeenth", "eighteenth", "nineteenth", "twentieth"};

using Signature = std::set<std::string, std::less<>>;

// Placeholder sets each task kind may use.
std::vector<Signature> allowed_signatures(TaskKind task) {
  const std::string e(kElement), eb(kElementB), p(kPosition), pb(kPositionB);
  const bool pos = task.cue == CueKind::Positional;
  switch (task.op) {
    case OpKind::Insert: return {{e, p}, {e}};
    case OpKind::Remove: return pos ? std::vector<Signature>{{p}, {e}} : std::vector<Signature>{{e}};
    case OpKind::Replace:
      return pos ? std::vector<Signature>{{p, eb}, {e, eb}} : std::vector<Signature>{{e, eb}};
    case OpKind::Swap: return pos ? std::vector<Signature>{{p, pb}, {e, eb}} : std::vector<Signature>{{e, eb}};
  }
  return {};
}

bool known_placeholder(std::string_view name) {
  return name == kElement || name == kElementB || name == kPosition || name == kPositionB;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw Error(ErrorKind::Template, "unknown split '" + std::string(name) + "'");
}

std::vector<std::string> Template::placeholders() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '}') throw Error(ErrorKind::Template, "template " + id + ": stray '}'");
    if (pattern[i] != '{') continue;
    const auto close = pattern.find('}', i + 1);
    if (close == std::string::npos) throw Error(ErrorKind::Template, "template " + id + ": unterminated placeholder");
    auto name = pattern.substr(i + 1, close - i - 1);
    if (!known_placeholder(name)) {
      throw Error(ErrorKind::Template, "template " + id + ": unknown placeholder {" + name + "}");
    }
    names.push_back(std::move(name));
    i = close;
  }
  return names;
}

bool Template::has(std::string_view placeholder) const {
  auto names = placeholders();
  return std::find(names.begin(), names.end(), placeholder) != names.end();
}

void validate_template(const Template& t) {
  const auto names = t.placeholders();
  Signature sig(names.begin(), names.end());
  if (sig.size() != names.size()) {
    throw Error(ErrorKind::Template, "template " + t.id + ": repeated placeholder");
  }
  const auto allowed = allowed_signatures(t.task);
  if (std::find(allowed.begin(), allowed.end(), sig) == allowed.end()) {
    throw Error(ErrorKind::Template, "template " + t.id + ": placeholders do not fit task " + t.task.label());
  }
}

std::string render(const Template& t, const CueValues& cues) {
  const auto names = t.placeholders();
  for (const auto& [key, value] : cues) {
    if (std::find(names.begin(), names.end(), key) == names.end()) {
      throw Error(ErrorKind::Template, "template " + t.id + ": unexpected cue value for {" + key + "}");
    }
  }
  const bool quote_elements = t.task.cue == CueKind::Semantic;
  std::string out;
  out.reserve(t.pattern.size() + 32);
  for (std::size_t i = 0; i < t.pattern.size(); ++i) {
    if (t.pattern[i] != '{') {
      out.push_back(t.pattern[i]);
      continue;
    }
    const auto close = t.pattern.find('}', i + 1);
    const auto name = std::string_view(t.pattern).substr(i + 1, close - i - 1);
    auto it = cues.find(name);
    if (it == cues.end()) {
      throw Error(ErrorKind::Template, "template " + t.id + ": missing cue value for {" + std::string(name) + "}");
    }
    const bool element = name == kElement || name == kElementB;
    if (element && quote_elements) {
      if (it->second.find('"') != std::string::npos) {
        throw Error(ErrorKind::Template, "semantic cue value contains a double quote: " + it->second);
      }
      out += '"' + it->second + '"';
    } else {
      out += it->second;
    }
    i = close;
  }
  return out;
}

TemplateSet::TemplateSet(std::vector<Template> templates) : templates_(std::move(templates)) {
  std::set<std::string> ids;
  for (const auto& t : templates_) {
    validate_template(t);
    if (!ids.insert(t.id).second) throw Error(ErrorKind::Template, "duplicate template id " + t.id);
  }
}

TemplateSet TemplateSet::from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw Error(ErrorKind::Template, "template corpus must be a JSON array");
  std::vector<Template> out;
  out.reserve(doc.size());
  for (const auto& rec : doc) {
    try {
      Template t{rec.at("id").get<std::string>(),
                 TaskKind{parse_op_name(rec.at("task").get<std::string>()),
                          parse_cue_name(rec.at("cue").get<std::string>())},
                 parse_split(rec.at("split").get<std::string>()), rec.at("pattern").get<std::string>()};
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Template, std::string("malformed template record: ") + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::Template, std::string("malformed template record: ") + e.what());
    }
  }
  return TemplateSet(std::move(out));
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open template corpus " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Template, path.string() + ": " + e.what());
  }
  auto set = from_json(doc);
  if (auto problems = set.coverage_problems(); !problems.empty()) {
    throw Error(ErrorKind::Template, path.string() + ": " + problems.front());
  }
  return set;
}

std::vector<const Template*> TemplateSet::bucket(TaskKind task, Split split) const {
  std::vector<const Template*> out;
  for (const auto& t : templates_) {
    if (t.task == task && t.split == split) out.push_back(&t);
  }
  return out;
}

const Template* TemplateSet::find(std::string_view id) const {
  for (const auto& t : templates_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::vector<std::string> TemplateSet::coverage_problems() const {
  std::vector<std::string> problems;
  for (const auto& task : TaskKind::all()) {
    for (auto split : {Split::Train, Split::Val, Split::Test}) {
      if (bucket(task, split).empty()) {
        problems.push_back("no " + std::string(split_name(split)) + " template for " + task.label());
      }
    }
  }
  std::set<std::string> train;
  for (const auto& t : templates_) {
    if (t.split == Split::Train) train.insert(t.pattern);
  }
  for (const auto& t : templates_) {
    if (t.split != Split::Train && train.contains(t.pattern)) {
      problems.push_back("pattern of " + t.id + " also appears in train: " + t.pattern);
    }
  }
  return problems;
}

nlohmann::json TemplateSet::to_json() const {
  auto doc = nlohmann::json::array();
  for (const auto& t : templates_) {
    doc.push_back({{"id", t.id},
                   {"task", op_name(t.task.op)},
                   {"cue", cue_name(t.task.cue)},
                   {"split", split_name(t.split)},
                   {"pattern", t.pattern}});
  }
  return doc;
}

const Template& sample_template(const TemplateSet& set, TaskKind task, Split split, Rng& rng) {
  return sample_template(set, task, split, rng, [](const Template&) { return true; });
}

const Template& sample_template(const TemplateSet& set, TaskKind task, Split split, Rng& rng,
                                const std::function<bool(const Template&)>& eligible) {
  std::vector<const Template*> pool;
  for (const auto* t : set.bucket(task, split)) {
    if (eligible(*t)) pool.push_back(t);
  }
  if (pool.empty()) {
    throw Error(ErrorKind::Template,
                "no " + std::string(split_name(split)) + " template available for " + task.label());
  }
  return *pool[rng.below(pool.size())];
}

namespace {

std::string numeric_ordinal(std::int64_t index) {
  const auto mod100 = index % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (index % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(index) + suffix;
}

}  // namespace

std::string ordinal_word(std::int64_t index) {
  if (index >= 1 && index <= static_cast<std::int64_t>(kOrdinals.size())) {
    return std::string(kOrdinals[static_cast<std::size_t>(index - 1)]);
  }
  return numeric_ordinal(index);
}

std::optional<std::int64_t> ordinal_value(std::string_view word) {
  const auto w = lower(word);
  for (std::size_t i = 0; i < kOrdinals.size(); ++i) {
    if (kOrdinals[i] == w) return static_cast<std::int64_t>(i + 1);
  }
  std::size_t digits = 0;
  while (digits < w.size() && std::isdigit(static_cast<unsigned char>(w[digits]))) ++digits;
  if (digits == 0 || digits > 6 || w.size() != digits + 2) return std::nullopt;
  const auto n = std::stoll(w.substr(0, digits));
  if (n < 1 || numeric_ordinal(n) != w) return std::nullopt;
  return n;
}

std::filesystem::path data_dir() { return ASSEMBLY_BENCH_DATA_DIR; }

std::filesystem::path default_template_path() {
  if (const char* env = std::getenv("ASSEMBLY_BENCH_TEMPLATES"); env && *env) return env;
  return data_dir() / "templates.json";
}

}  // namespace assembly
