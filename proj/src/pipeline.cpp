#include "twp/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "twp/backend.hpp"
#include "twp/dedup.hpp"
#include "twp/error.hpp"
#include "twp/hash.hpp"
#include "twp/mixer.hpp"
#include "twp/pack.hpp"
#include "twp/quality.hpp"

namespace twp {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kMarker = "pipeline.json";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so a kill never leaves a half-written marker or manifest.
void put(const fs::path& p, const std::string& content) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

void prepare_root(const PipelineOptions& o) {
  const auto& out = o.out_dir;
  if (fs::exists(out) && !fs::is_directory(out)) throw ConfigError(out.string() + ": not a directory");
  const bool nonempty = fs::exists(out) && !fs::is_empty(out);
  if (nonempty) {
    if (!fs::is_regular_file(out / kMarker)) {
      throw ConfigError(out.string() + ": directory is not empty and holds no pipeline output; refusing to touch it");
    }
    if (o.mode == ResumeMode::fresh) {
      throw ConfigError(out.string() + ": already holds pipeline output; pass --resume or --restart");
    }
    if (o.mode == ResumeMode::restart) {
      for (const auto& e : fs::directory_iterator(out)) fs::remove_all(e.path());
    }
  }
  fs::create_directories(out);
  if (!fs::exists(out / kMarker)) {
    ordered_json m;
    m["_twp_pipeline"] = true;
    m["version"] = 1;
    put(out / kMarker, m.dump(2) + "\n");
  }
}

// Setting prefixes that decide whether a finished stage can be reused.
using Keys = std::vector<std::string_view>;
const Keys kFilterKeys{"pipeline.", "quality."};
const Keys kDedupKeys{"global.seed", "dedup."};
const Keys kTranslateKeys{"global.seed", "tokenizer.", "segment.", "translate.", "backend."};
const Keys kMixKeys{"global.seed", "tokenizer.", "translate.enabled", "translate.source", "translate.targets", "mix."};
const Keys kPackKeys{"tokenizer.", "pack."};

struct StageFailed {
  std::string stage;
};

class Stages {
 public:
  Stages(fs::path root, std::string snapshot, bool resume)
      : root_(std::move(root)), snapshot_(std::move(snapshot)), resume_(resume) {}

  // Runs body(dir, continuing) unless a finished run of this stage under the
  // same settings can be reused. Only settings under `keys` (prefixes) count
  // for reuse. `resumable` stages keep their partial directory so they can
  // continue (translate journal).
  template <class F>
  ordered_json run(const std::string& name, const Keys& keys, bool resumable, F&& body) {
    const auto dir = root_ / name;
    const bool same = resume_ && !rebuilt_ && fs::is_regular_file(dir / "config.resolved") &&
                      relevant(slurp(dir / "config.resolved"), keys) == relevant(snapshot_, keys);
    if (same && fs::exists(dir / "DONE") && fs::is_regular_file(dir / "manifest.json")) {
      skipped_.push_back(name);
      return ordered_json::parse(slurp(dir / "manifest.json"));
    }
    const bool continuing = same && resumable;
    if (!continuing) fs::remove_all(dir);
    rebuilt_ = true;  // downstream stages must be rebuilt
    fs::create_directories(dir);
    fs::remove(dir / "DONE");
    fs::remove(dir / "FAILED");
    put(dir / "config.resolved", snapshot_);
    try {
      ordered_json m = body(dir, continuing);
      m["stage"] = name;
      put(dir / "manifest.json", m.dump(2) + "\n");
      put(dir / "DONE", "");
      return m;
    } catch (const std::exception& e) {
      put(dir / "FAILED", std::string(e.what()) + "\n");
      failed_ = name;
      throw;
    }
  }

  const std::vector<std::string>& skipped() const { return skipped_; }
  const std::string& failed() const { return failed_; }

 private:
  static std::string relevant(const std::string& snapshot, const Keys& keys) {
    std::string out;
    std::istringstream in(snapshot);
    for (std::string line; std::getline(in, line);) {
      for (auto k : keys) {
        if (line.starts_with(k)) {
          out += line + "\n";
          break;
        }
      }
    }
    return out;
  }

  fs::path root_;
  std::string snapshot_;
  bool resume_;
  bool rebuilt_ = false;
  std::vector<std::string> skipped_;
  std::string failed_;
};

// Languages the automatic mix balances: the source plus translation targets,
// or every target language present when translation is off.
std::vector<Lang> mix_languages(const PipelineConfig& pc, const std::map<Lang, std::uint64_t>& available) {
  std::vector<Lang> out;
  if (pc.translate_enabled) {
    out.push_back(pc.source);
    for (Lang t : pc.targets) out.push_back(t);
  } else {
    for (Lang l : kTargetLanguages) {
      if (available.contains(l) && available.at(l) > 0) out.push_back(l);
    }
  }
  return out;
}

}  // namespace

PipelineOutcome run_pipeline(const Config& config, const PipelineConfig& pc, const PipelineOptions& o) {
  if (!fs::is_regular_file(o.input)) throw ConfigError("input corpus not found: " + o.input.string());
  prepare_root(o);
  const auto input = fs::absolute(o.input).lexically_normal();
  const std::string snapshot = config.snapshot() + "pipeline.input = \"" + input.string() + "\"\n" +
                               "pipeline.read_mode = \"" + (o.read_mode == ReadMode::strict ? "strict" : "lenient") +
                               "\"\n";
  put(o.out_dir / "config.resolved", snapshot);

  Stages stages(o.out_dir, snapshot, o.mode == ResumeMode::resume);
  PipelineOutcome outcome;
  ordered_json summary;
  summary["input"] = input.string();
  summary["seed"] = pc.seed;
  summary["tokenizer_fingerprint"] = pc.counter.fingerprint();

  const auto filter_dir = o.out_dir / kStageFilter;
  const auto dedup_dir = o.out_dir / kStageDedup;
  const auto translate_dir = o.out_dir / kStageTranslate;
  const auto mix_dir = o.out_dir / kStageMix;
  const auto pack_dir = o.out_dir / kStagePack;

  try {
    summary["filter"] = stages.run(kStageFilter, kFilterKeys, false, [&](const fs::path& dir, bool) {
      auto s = filter_corpus(input, pc.quality, dir, o.read_mode);
      ordered_json m = s.to_json();
      m["input"] = input.string();
      m["rules"] = pc.quality.to_json();
      return m;
    });

    summary["dedup"] = stages.run(kStageDedup, kDedupKeys, false, [&](const fs::path& dir, bool) {
      auto s = dedup_corpus(filter_dir / "kept.jsonl", pc.dedup, dir);
      ordered_json m = s.to_json();
      m["params"] = pc.dedup.to_json();
      return m;
    });

    if (pc.translate_enabled) {
      summary["translate"] = stages.run(kStageTranslate, kTranslateKeys, true, [&](const fs::path& dir, bool continuing) {
        auto backend = make_backend(pc.backend);
        auto r = translate_corpus(dedup_dir / "kept.jsonl", pc.source, pc.targets, *backend, pc.prompt, pc.counter,
                                  pc.abbreviations, pc.translate, dir,
                                  continuing ? ResumeMode::resume : ResumeMode::fresh);
        ordered_json m = r.manifest;
        m["resumed_pairs"] = r.resumed_pairs;
        std::uint64_t failed = 0;
        for (const auto& [t, n] : r.failed) failed += n;
        if (failed > 0) m["warning"] = std::to_string(failed) + " translations failed; see failures.jsonl";
        return m;
      });
    } else {
      fs::remove_all(translate_dir);
      summary["translate"] = {{"enabled", false}};
    }

    summary["mix"] = stages.run(kStageMix, kMixKeys, false, [&](const fs::path& dir, bool) {
      // Per-language source corpora: deduplicated originals plus translations.
      fs::create_directories(dir / "sources");
      std::map<Lang, std::unique_ptr<CorpusWriter>> writers;
      std::map<Lang, std::uint64_t> docs;
      std::map<Lang, std::uint64_t> tokens;
      const CorpusHeader header{pc.counter.fingerprint()};
      for (Lang l : kTargetLanguages) {
        writers[l] = std::make_unique<CorpusWriter>(dir / "sources" / (std::string(to_string(l)) + ".jsonl"), header);
      }
      std::uint64_t excluded_other = 0;
      auto add_file = [&](const fs::path& p) {
        CorpusReader reader(p, ReadMode::strict);
        const bool cache = reader.cache_valid_for(pc.counter.fingerprint());
        while (auto d = reader.next()) {
          if (d->lang == Lang::other) {
            ++excluded_other;
            continue;
          }
          d->token_count = effective_token_count(*d, pc.counter, cache);
          tokens[d->lang] += *d->token_count;
          ++docs[d->lang];
          writers[d->lang]->write(*d);
        }
      };
      add_file(dedup_dir / "kept.jsonl");
      if (pc.translate_enabled) {
        for (Lang t : pc.targets) add_file(translate_dir / (std::string(to_string(t)) + ".jsonl"));
      }
      for (auto& [l, w] : writers) w->flush();
      writers.clear();

      ordered_json m;
      m["excluded_other_language"] = excluded_other;
      m["sources"] = ordered_json::object();
      for (Lang l : kTargetLanguages) {
        m["sources"][std::string(to_string(l))] = {{"documents", docs[l]}, {"tokens", tokens[l]}};
      }
      const auto langs = mix_languages(pc, tokens);
      m["stages"] = ordered_json::object();
      for (const auto& st : pc.stages) {
        MixtureSpec spec;
        spec.stage = st.name;
        spec.seed = derive_seed(pc.seed, "mix");
        spec.shuffle_buffer = pc.shuffle_buffer;
        if (st.automatic) {
          // Equal token budgets: the smallest language total.
          if (langs.empty()) throw DataError("mix." + st.name + ": no language has any documents");
          std::uint64_t budget = UINT64_MAX;
          for (Lang l : langs) budget = std::min(budget, tokens[l]);
          if (budget == 0) {
            std::string empty;
            for (Lang l : langs) {
              if (tokens[l] == 0) empty += (empty.empty() ? "" : ", ") + std::string(to_string(l));
            }
            throw DataError("mix." + st.name + ": no tokens for " + empty + "; cannot balance languages");
          }
          for (Lang l : langs) {
            const std::string t(to_string(l));
            spec.entries.push_back({t, dir / "sources" / (t + ".jsonl"), budget, std::nullopt});
          }
        } else {
          spec.total_tokens = st.total_tokens;
          for (const auto& [name, ref] : st.sources) {
            MixtureEntry e{name, ref, std::nullopt, std::nullopt};
            if (ref.starts_with("@")) e.corpus = dir / "sources" / (ref.substr(1) + ".jsonl");
            if (auto it = st.budgets.find(name); it != st.budgets.end()) e.budget = it->second;
            if (auto it = st.weights.find(name); it != st.weights.end()) e.weight = it->second;
            spec.entries.push_back(std::move(e));
          }
        }
        auto r = compose_stage(spec, pc.counter, dir / st.name);
        m["stages"][st.name] = r.manifest;
      }
      return m;
    });

    summary["pack"] = stages.run(kStagePack, kPackKeys, false, [&](const fs::path& dir, bool) {
      auto pm = pack_corpus(mix_dir / pc.pack_stage / "mixed.jsonl", pc.counter, pc.sequence_length,
                            dir / "packed.bin");
      ordered_json m = pm.to_json();
      m["mix_stage"] = pc.pack_stage;
      m["batch_size"] = pc.batch_size;
      m["tokens_per_batch"] = static_cast<std::uint64_t>(pc.sequence_length) * pc.batch_size;
      m["full_batches"] = pm.sequence_count / pc.batch_size;
      return m;
    });
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    outcome.exit_code = 1;
    outcome.failed_stage = stages.failed();
    outcome.message = e.what();
    summary["failed_stage"] = outcome.failed_stage;
    summary["error"] = outcome.message;
  }

  summary["skipped_stages"] = stages.skipped();
  summary["status"] = outcome.exit_code == 0 ? "ok" : "failed";
  put(o.out_dir / "manifest.json", summary.dump(2) + "\n");
  outcome.manifest = std::move(summary);
  return outcome;
}

}  // namespace twp
