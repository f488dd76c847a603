#include "assembly/generator.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_set>

namespace assembly {

namespace {

struct ItemRef {
  std::size_t seq;
  std::size_t item;
  friend bool operator==(const ItemRef&, const ItemRef&) = default;
};

/// Flattened view of the manifest with normalized captions.
class SourcePool {
 public:
  explicit SourcePool(const SourceManifest& manifest) : manifest_(manifest) {
    offsets_.reserve(manifest.sequences.size() + 1);
    offsets_.push_back(0);
    normalized_.reserve(manifest.sequences.size());
    for (const auto& seq : manifest.sequences) {
      offsets_.push_back(offsets_.back() + seq.items.size());
      auto& norm = normalized_.emplace_back();
      norm.reserve(seq.items.size());
      for (const auto& item : seq.items) norm.push_back(normalize_caption(item.caption));
    }
  }

  const SourceManifest& manifest() const { return manifest_; }
  std::size_t total_items() const { return offsets_.back(); }
  const SourceItem& item(ItemRef r) const { return manifest_.sequences[r.seq].items[r.item]; }
  const std::string& normalized(ItemRef r) const { return normalized_[r.seq][r.item]; }

  ItemRef from_flat(std::size_t flat) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
    const auto seq = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    return {seq, flat - offsets_[seq]};
  }

  std::size_t longest_sequence() const {
    std::size_t best = 0;
    for (const auto& s : manifest_.sequences) best = std::max(best, s.items.size());
    return best;
  }

 private:
  const SourceManifest& manifest_;
  std::vector<std::size_t> offsets_;
  std::vector<std::vector<std::string>> normalized_;
};

// One corruption step, expressed over indices into Draft::assets.
struct Step {
  TaskKind task;
  std::vector<int> before;  // timeline the instruction is applied to
  std::vector<int> after;   // timeline it must produce
  std::size_t j = 0;        // 1-based positions in `before` (insert: in `after`)
  std::size_t k = 0;
  int element = -1;
  int element_b = -1;
};

struct Draft {
  std::size_t source_seq = 0;
  std::vector<ItemRef> assets;
  std::vector<int> gold;
  std::vector<Step> steps;  // execution order
};

class Builder {
 public:
  Builder(const SourcePool& pool, const GenConfig& cfg, const TemplateSet& templates, Rng& rng)
      : pool_(pool), cfg_(cfg), templates_(templates), rng_(rng) {}

  Sample build(const std::vector<TaskKind>& tasks, std::size_t length) {
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(cfg_.max_retries, 1); ++attempt) {
      auto draft = draft_timelines(tasks, length);
      auto collection_refs = fill_collection(draft);
      if (!captions_usable(draft, collection_refs)) continue;
      return finish(draft, collection_refs, length);
    }
    std::string label;
    for (const auto& t : tasks) label += (label.empty() ? "" : "+") + t.label();
    throw Error(ErrorKind::Generation, "caption uniqueness not satisfied for " + label + " after " +
                                           std::to_string(cfg_.max_retries) + " attempts");
  }

 private:
  Draft draft_timelines(const std::vector<TaskKind>& tasks, std::size_t length) {
    std::vector<std::size_t> eligible;
    for (std::size_t s = 0; s < pool_.manifest().sequences.size(); ++s) {
      if (pool_.manifest().sequences[s].items.size() >= length) eligible.push_back(s);
    }
    if (eligible.empty()) {
      throw Error(ErrorKind::Generation,
                  "insufficient source data: no sequence with at least " + std::to_string(length) + " items");
    }
    Draft d;
    d.source_seq = eligible[rng_.below(eligible.size())];
    const auto seq_len = pool_.manifest().sequences[d.source_seq].items.size();
    const auto start = rng_.below(seq_len - length + 1);
    for (std::size_t i = 0; i < length; ++i) {
      d.assets.push_back({d.source_seq, start + i});
      d.gold.push_back(static_cast<int>(i));
    }
    // Build backwards from the gold timeline: the last op is corrupted first.
    std::vector<int> target = d.gold;
    std::vector<Step> reversed;
    for (auto it = tasks.rbegin(); it != tasks.rend(); ++it) {
      auto step = corrupt(*it, target, d);
      target = step.before;
      reversed.push_back(std::move(step));
    }
    d.steps.assign(reversed.rbegin(), reversed.rend());
    return d;
  }

  int new_distractor(Draft& d) {
    const auto total = pool_.total_items();
    const auto own = pool_.manifest().sequences[d.source_seq].items.size();
    const auto distractors_used = d.assets.size() - d.gold.size();
    if (total - own <= distractors_used) {
      throw Error(ErrorKind::Generation, "insufficient source data: not enough distractor assets");
    }
    for (int tries = 0; tries < 10000; ++tries) {
      const auto ref = pool_.from_flat(rng_.below(total));
      if (ref.seq == d.source_seq) continue;
      if (std::find(d.assets.begin(), d.assets.end(), ref) != d.assets.end()) continue;
      d.assets.push_back(ref);
      return static_cast<int>(d.assets.size() - 1);
    }
    throw Error(ErrorKind::Generation, "insufficient source data: distractor sampling did not converge");
  }

  Step corrupt(TaskKind task, const std::vector<int>& target, Draft& d) {
    Step s;
    s.task = task;
    s.after = target;
    const auto n = target.size();
    switch (task.op) {
      case OpKind::Insert: {
        if (n < 2) throw Error(ErrorKind::Generation, "insert needs a timeline of at least 2 elements");
        s.j = 1 + rng_.below(n);
        s.element = target[s.j - 1];
        s.before = target;
        s.before.erase(s.before.begin() + static_cast<std::ptrdiff_t>(s.j - 1));
        break;
      }
      case OpKind::Remove: {
        s.element = new_distractor(d);
        s.j = 1 + rng_.below(n + 1);
        s.before = target;
        s.before.insert(s.before.begin() + static_cast<std::ptrdiff_t>(s.j - 1), s.element);
        break;
      }
      case OpKind::Replace: {
        s.element = new_distractor(d);
        s.j = 1 + rng_.below(n);
        s.element_b = target[s.j - 1];
        s.before = target;
        s.before[s.j - 1] = s.element;
        break;
      }
      case OpKind::Swap: {
        if (n < 2) throw Error(ErrorKind::Generation, "swap needs a timeline of at least 2 elements");
        // Uniform over unordered pairs {j, k}, j < k.
        const auto pairs = n * (n - 1) / 2;
        auto r = rng_.below(pairs);
        std::size_t j = 1;
        while (r >= n - j) {
          r -= n - j;
          ++j;
        }
        s.j = j;
        s.k = j + 1 + r;
        s.before = target;
        std::swap(s.before[s.j - 1], s.before[s.k - 1]);
        s.element = s.before[s.j - 1];
        s.element_b = s.before[s.k - 1];
        break;
      }
    }
    return s;
  }

  std::vector<ItemRef> fill_collection(Draft& d) {
    if (d.assets.size() > cfg_.collection_size) {
      throw Error(ErrorKind::Generation, "collection size " + std::to_string(cfg_.collection_size) +
                                             " cannot hold the " + std::to_string(d.assets.size()) +
                                             " timeline assets");
    }
    while (d.assets.size() < cfg_.collection_size) new_distractor(d);
    auto refs = d.assets;
    return refs;
  }

  bool captions_usable(const Draft& d, const std::vector<ItemRef>& refs) const {
    std::unordered_set<std::string> seen;
    for (const auto& r : refs) {
      if (!seen.insert(pool_.normalized(r)).second) return false;
    }
    for (const auto& step : d.steps) {
      if (step.task.cue != CueKind::Semantic) continue;
      for (int e : {step.element, step.element_b}) {
        if (e >= 0 && !cue_safe(pool_.normalized(d.assets[static_cast<std::size_t>(e)]))) return false;
      }
    }
    return true;
  }

  static bool cue_safe(const std::string& caption) {
    // Quoted single position words read as positional cues.
    if (caption.empty() || caption == "last" || caption == "end" || caption == "beginning" || caption == "start" ||
        ordinal_value(caption)) {
      return false;
    }
    return caption.find('"') == std::string::npos && caption.find("\xe2\x80\x9c") == std::string::npos &&
           caption.find("\xe2\x80\x9d") == std::string::npos;
  }

  std::string position_phrase(std::size_t j, std::size_t last) {
    if (j == last && rng_.coin()) return "last";
    return ordinal_word(static_cast<std::int64_t>(j));
  }

  Sample finish(const Draft& d, const std::vector<ItemRef>& refs, std::size_t length) {
    // Shuffle collection order, then give every local asset an id.
    std::vector<int> order(refs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng_.shuffle(std::span<int>(order));
    const auto ids = assign_ids(refs.size(), rng_);

    std::vector<std::optional<AssetId>> local_id(refs.size());
    std::vector<Asset> assets;
    assets.reserve(refs.size());
    for (std::size_t slot = 0; slot < order.size(); ++slot) {
      const auto local = static_cast<std::size_t>(order[slot]);
      local_id[local] = ids[slot];
      const auto& item = pool_.item(refs[local]);
      assets.push_back(Asset{ids[slot], item.caption, item.uri});
    }
    auto id_of = [&](int local) { return *local_id[static_cast<std::size_t>(local)]; };
    auto to_timeline = [&](const std::vector<int>& locals) {
      Timeline t;
      for (int l : locals) t.push_back(id_of(l));
      return t;
    };

    Sample s;
    s.collection = Collection(std::move(assets));
    s.input = to_timeline(d.steps.front().before);
    s.output = to_timeline(d.gold);
    s.meta.length = length;
    s.meta.sequence_id = pool_.manifest().sequences[d.source_seq].sequence_id;

    std::vector<std::string> surfaces;
    for (const auto& step : d.steps) {
      s.tasks.push_back(step.task);
      auto [tmpl, text] = render_step(step, d, id_of);
      s.meta.template_ids.push_back(tmpl->id);
      surfaces.push_back(std::move(text));
    }
    s.instruction = join_surfaces(surfaces);
    return s;
  }

  template <typename IdOf>
  std::pair<const Template*, std::string> render_step(const Step& step, const Draft& d, IdOf id_of) {
    auto caption = [&](int local) { return pool_.normalized(d.assets[static_cast<std::size_t>(local)]); };
    const bool semantic = step.task.cue == CueKind::Semantic;
    auto element_value = [&](int local) { return semantic ? caption(local) : id_of(local).str(); };

    const Template* t = nullptr;
    CueValues cues;
    switch (step.task.op) {
      case OpKind::Insert: {
        const auto last = step.after.size();
        t = &sample_template(templates_, step.task, cfg_.split, rng_,
                             [&](const Template& c) { return c.has(kPosition) || step.j == last; });
        cues[std::string(kElement)] = element_value(step.element);
        if (t->has(kPosition)) cues[std::string(kPosition)] = position_phrase(step.j, last);
        break;
      }
      case OpKind::Remove: {
        t = &sample_template(templates_, step.task, cfg_.split, rng_);
        if (t->has(kPosition)) {
          cues[std::string(kPosition)] = position_phrase(step.j, step.before.size());
        } else {
          cues[std::string(kElement)] = element_value(step.element);
        }
        break;
      }
      case OpKind::Replace: {
        t = &sample_template(templates_, step.task, cfg_.split, rng_);
        if (t->has(kPosition)) {
          cues[std::string(kPosition)] = position_phrase(step.j, step.before.size());
        } else {
          cues[std::string(kElement)] = element_value(step.element);
        }
        cues[std::string(kElementB)] = element_value(step.element_b);
        break;
      }
      case OpKind::Swap: {
        t = &sample_template(templates_, step.task, cfg_.split, rng_);
        const bool flip = rng_.coin();
        if (t->has(kPosition)) {
          const auto n = step.before.size();
          auto a = position_phrase(flip ? step.k : step.j, n);
          auto b = position_phrase(flip ? step.j : step.k, n);
          cues[std::string(kPosition)] = std::move(a);
          cues[std::string(kPositionB)] = std::move(b);
        } else {
          cues[std::string(kElement)] = element_value(flip ? step.element_b : step.element);
          cues[std::string(kElementB)] = element_value(flip ? step.element : step.element_b);
        }
        break;
      }
    }
    return {t, render(*t, cues)};
  }

  static std::string join_surfaces(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      std::string p = parts[i];
      if (i == 0) {
        out = p;
        continue;
      }
      if (!out.empty() && out.back() != '.') out += '.';
      if (!p.empty()) p[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(p[0])));
      out += " Then, " + p;
    }
    return out;
  }

  const SourcePool& pool_;
  const GenConfig& cfg_;
  const TemplateSet& templates_;
  Rng& rng_;
};

std::size_t choose_length(const GenConfig& cfg, Rng& rng) {
  if (cfg.length.fixed()) return cfg.length.min;
  return static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(cfg.length.min), static_cast<std::int64_t>(cfg.length.max)));
}

std::string bucket_label(const std::vector<TaskKind>& tasks) {
  std::string ops;
  for (const auto& t : tasks) ops += (ops.empty() ? "" : "+") + std::string(op_name(t.op));
  return ops + "/" + std::string(cue_name(tasks.front().cue));
}

}  // namespace

LengthRange parse_length_range(std::string_view text) {
  auto number = [&](std::string_view part) -> std::size_t {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw Error(ErrorKind::Generation, "bad length '" + std::string(text) + "'; expected N or MIN:MAX");
    }
    return v;
  };
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    const auto n = number(text);
    return {n, n};
  }
  return {number(text.substr(0, colon)), number(text.substr(colon + 1))};
}

void GenConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Generation, "invalid configuration: " + msg); };
  if (length.min < 2 || length.max < length.min) fail("timeline length must satisfy 2 <= min <= max");
  if (!length.fixed() && length.max > 19) fail("timeline length range must lie within [2, 19]");
  if (collection_size < length.max + 1) fail("collection_size must be at least max timeline length + 1");
  if (collection_size >= kIdSpace) fail("collection_size must be below 10000");
  if (compositional) {
    if (length.min < 3) fail("compositional samples need timeline length >= 3");
    if (collection_size < length.max + 2) fail("compositional samples need collection_size >= max length + 2");
  }
  if (max_retries == 0) fail("max_retries must be positive");
}

std::string Sample::op_label() const {
  std::string ops;
  for (const auto& t : tasks) ops += (ops.empty() ? "" : "+") + std::string(op_name(t.op));
  return ops;
}

std::string Sample::task_label() const { return bucket_label(tasks); }

std::size_t GenSummary::total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : per_task) n += c;
  return n;
}

Sample make_sample(const SourceManifest& manifest, TaskKind task, const GenConfig& cfg, const TemplateSet& templates,
                   Rng& rng) {
  cfg.validate();
  SourcePool pool(manifest);
  Builder b(pool, cfg, templates, rng);
  return b.build({task}, choose_length(cfg, rng));
}

Sample make_compositional(const SourceManifest& manifest, OpKind first, OpKind second, const GenConfig& cfg,
                          const TemplateSet& templates, Rng& rng) {
  auto c = cfg;
  c.compositional = true;
  c.validate();
  SourcePool pool(manifest);
  Builder b(pool, c, templates, rng);
  return b.build({TaskKind{first, CueKind::Semantic}, TaskKind{second, CueKind::Semantic}}, choose_length(c, rng));
}

std::vector<std::vector<TaskKind>> dataset_tasks(bool compositional) {
  std::vector<std::vector<TaskKind>> out;
  if (!compositional) {
    for (const auto& t : TaskKind::all()) out.push_back({t});
    return out;
  }
  const OpKind ops[] = {OpKind::Insert, OpKind::Remove, OpKind::Replace, OpKind::Swap};
  for (auto a : ops) {
    for (auto b : ops) out.push_back({TaskKind{a, CueKind::Semantic}, TaskKind{b, CueKind::Semantic}});
  }
  return out;
}

Dataset make_dataset(const SourceManifest& manifest, const GenConfig& cfg, const TemplateSet& templates,
                     const ProgressFn& progress) {
  cfg.validate();
  const auto buckets = dataset_tasks(cfg.compositional);
  const SourcePool pool(manifest);

  if (cfg.samples_per_task > 0 && pool.longest_sequence() < cfg.length.max) {
    throw Error(ErrorKind::Generation, "insufficient source data for task " + bucket_label(buckets.front()) +
                                           ": no sequence with " + std::to_string(cfg.length.max) + " items");
  }

  const auto per = cfg.samples_per_task;
  const auto total = buckets.size() * per;
  std::vector<std::optional<Sample>> slots(total);
  std::vector<std::size_t> skipped(total, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::mutex progress_mu;

  auto work = [&] {
    for (;;) {
      const auto slot = next.fetch_add(1);
      if (slot >= total) return;
      {
        std::lock_guard lock(err_mu);
        if (first_error) return;
      }
      const auto b = slot / per;
      const auto i = slot % per;
      const auto& tasks = buckets[b];
      // Multi-length sets cycle through the range so every length is covered.
      const std::size_t span = cfg.length.max - cfg.length.min + 1;
      const std::size_t length = cfg.length.min + i % span;
      try {
        for (std::size_t attempt = 0;; ++attempt) {
          const auto seed = derive_seed(cfg.seed, {b, i, attempt});
          Rng rng(seed);
          Builder builder(pool, cfg, templates, rng);
          try {
            auto s = builder.build(tasks, length);
            s.meta.seed = seed;
            char id[96];
            std::snprintf(id, sizeof id, "%s-%s-%04zu", s.op_label().c_str(),
                          std::string(cue_name(tasks.front().cue)).c_str(), i);
            s.sample_id = id;
            slots[slot] = std::move(s);
            break;
          } catch (const Error& e) {
            const bool retryable = e.kind() == ErrorKind::Generation &&
                                   std::string_view(e.what()).find("caption uniqueness") != std::string_view::npos;
            if (!retryable || attempt + 1 >= cfg.max_retries) {
              throw Error(ErrorKind::Generation, "task " + bucket_label(tasks) + ": " + e.what());
            }
            ++skipped[slot];
          }
        }
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
      const auto d = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(progress_mu);
        progress(d, total);
      }
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < n_threads; ++t) workers.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);

  Dataset ds;
  ds.samples.reserve(total);
  for (const auto& b : buckets) ds.summary.per_task[bucket_label(b)] = 0;
  for (std::size_t slot = 0; slot < total; ++slot) {
    ds.summary.per_task[ds.samples.emplace_back(std::move(*slots[slot])).task_label()]++;
    ds.summary.skipped += skipped[slot];
  }
  return ds;
}

}  // namespace assembly
