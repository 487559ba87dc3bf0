#include "twp/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "twp/config.hpp"
#include "twp/dedup.hpp"
#include "twp/error.hpp"
#include "twp/hash.hpp"
#include "twp/mixer.hpp"
#include "twp/pack.hpp"
#include "twp/parallel.hpp"
#include "twp/pipeline.hpp"
#include "twp/probe.hpp"
#include "twp/quality.hpp"
#include "twp/segment.hpp"
#include "twp/translate.hpp"

namespace twp::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Globals {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> sets;
  bool strict = false;
  bool resume = false;
  bool restart = false;
  bool exact = false;
};

struct Loaded {
  Config config;
  PipelineConfig pc;
};

Loaded load(const Globals& g) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& s : g.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + s + ": expected key=value");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (g.seed) overrides.emplace_back("global.seed", std::to_string(*g.seed));
  if (g.workers) overrides.emplace_back("global.workers", std::to_string(*g.workers));
  if (g.exact) overrides.emplace_back("dedup.exact", "true");
  std::optional<fs::path> file;
  if (g.config) file = *g.config;
  Loaded l{load_config(file, overrides), {}};
  l.pc = PipelineConfig::resolve(l.config);
  set_worker_count(l.pc.workers);
  return l;
}

ResumeMode resume_mode(const Globals& g) {
  if (g.resume && g.restart) throw ConfigError("--resume and --restart are mutually exclusive");
  return g.resume ? ResumeMode::resume : g.restart ? ResumeMode::restart : ResumeMode::fresh;
}

ReadMode read_mode(const Globals& g) { return g.strict ? ReadMode::strict : ReadMode::lenient; }

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << s;
  if (!out) throw IoError("cannot write " + p.string());
}

// Fresh output directories must be empty unless --restart/--resume.
void prepare_dir(const fs::path& dir, const Globals& g) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw ConfigError(dir.string() + ": not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir) && !g.resume && !g.restart) {
    throw ConfigError(dir.string() + ": output directory is not empty; pass --restart to overwrite");
  }
  fs::create_directories(dir);
}

void finish_dir(const fs::path& dir, const Loaded& l, const ordered_json& manifest) {
  write_text(dir / "config.resolved", l.config.snapshot());
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

void emit(const ordered_json& j, const std::optional<std::string>& out) {
  if (out) write_text(*out, j.dump(2) + "\n");
  else std::cout << j.dump(2) << "\n";
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Lang> parse_targets(const std::string& list) {
  std::vector<Lang> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto l = parse_lang(item);
    if (!l || *l == Lang::other) throw ConfigError("--targets: unknown language '" + item + "'");
    out.push_back(*l);
  }
  return out;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Multilingual pretraining corpus toolkit", "twp"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Settings file (key = value)");
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--workers", g.workers, "Worker threads (0 = all cores)");
  app.add_option("--set", g.sets, "Override a setting: key=value (repeatable)");
  app.add_flag("--strict", g.strict, "Abort on malformed input lines");
  app.add_flag("--resume", g.resume, "Continue an interrupted run");
  app.add_flag("--restart", g.restart, "Discard previous output and start over");
  app.add_flag("--exact", g.exact, "Verify dedup candidates with exact Jaccard");
  app.fallthrough();

  std::function<int()> action;

  // stats
  auto* stats = app.add_subcommand("stats", "Per-language token statistics");
  std::string stats_in;
  std::optional<std::string> stats_out;
  stats->add_option("corpus", stats_in)->required();
  stats->add_option("-o,--output", stats_out);
  stats->callback([&] {
    action = [&] {
      auto l = load(g);
      CorpusReader reader(stats_in, read_mode(g));
      auto s = compute_stats(reader, l.pc.counter);
      auto j = s.to_json();
      if (!reader.errors().empty()) j["read_errors"] = reader.errors().size();
      emit(j, stats_out);
      for (const auto& e : reader.errors()) std::cerr << stats_in << ":" << e.line << ": " << e.message << "\n";
      return 0;
    };
  });

  // segment
  auto* seg = app.add_subcommand("segment", "Sentence segmentation and chunking");
  std::string seg_in;
  std::optional<std::string> seg_out;
  std::optional<std::uint64_t> seg_limit;
  seg->add_option("corpus", seg_in)->required();
  seg->add_option("-o,--output", seg_out, "JSONL output (default stdout)");
  seg->add_option("--limit", seg_limit, "Chunk token limit");
  seg->callback([&] {
    action = [&] {
      auto l = load(g);
      const auto limit = seg_limit.value_or(l.pc.chunk_limit);
      if (limit == 0) throw ConfigError("--limit must be at least 1");
      std::unique_ptr<std::ofstream> file;
      if (seg_out) {
        file = std::make_unique<std::ofstream>(*seg_out, std::ios::binary);
        if (!*file) throw IoError("cannot write " + *seg_out);
      }
      std::ostream& out = file ? *file : std::cout;
      CorpusReader reader(seg_in, read_mode(g));
      while (auto d = reader.next()) {
        auto chunks = chunk_document(*d, l.pc.counter, l.pc.abbreviations, limit);
        ordered_json j;
        j["id"] = d->id;
        j["lang"] = to_string(d->lang);
        j["chunks"] = ordered_json::array();
        for (const auto& c : chunks) {
          ordered_json cj;
          cj["index"] = c.index;
          cj["token_count"] = c.token_count;
          cj["sentences"] = ordered_json::array();
          for (const auto& s : c.sentences) {
            cj["sentences"].push_back({{"text", s.text}, {"begin", s.begin}, {"end", s.end}, {"terminal", s.terminal}});
          }
          j["chunks"].push_back(cj);
        }
        out << j.dump() << "\n";
      }
      for (const auto& e : reader.errors()) std::cerr << seg_in << ":" << e.line << ": " << e.message << "\n";
      return 0;
    };
  });

  // translate
  auto* tr = app.add_subcommand("translate", "Chunked machine translation of a corpus");
  std::string tr_in, tr_out;
  std::optional<std::string> tr_targets;
  tr->add_option("corpus", tr_in)->required();
  tr->add_option("-o,--output", tr_out, "Output directory")->required();
  tr->add_option("--targets", tr_targets, "Comma-separated target languages");
  tr->callback([&] {
    action = [&] {
      auto l = load(g);
      const auto mode = resume_mode(g);
      if (mode == ResumeMode::restart) fs::remove_all(tr_out);
      const auto targets = tr_targets ? parse_targets(*tr_targets) : l.pc.targets;
      if (fs::exists(tr_out) && !fs::is_empty(tr_out) && mode == ResumeMode::fresh) {
        throw ConfigError(tr_out + ": output directory is not empty; pass --resume or --restart");
      }
      auto backend = make_backend(l.pc.backend);
      auto r = translate_corpus(tr_in, l.pc.source, targets, *backend, l.pc.prompt, l.pc.counter, l.pc.abbreviations,
                                l.pc.translate, tr_out, mode);
      finish_dir(tr_out, l, r.manifest);
      std::cout << r.manifest.dump(2) << "\n";
      std::uint64_t failed = 0;
      for (const auto& [t, n] : r.failed) failed += n;
      if (failed) std::cerr << failed << " document translation(s) failed; see " << (fs::path(tr_out) / "failures.jsonl") << "\n";
      return 0;
    };
  });

  // filter
  auto* fl = app.add_subcommand("filter", "Gopher-rule quality filtering");
  std::string fl_in, fl_out;
  fl->add_option("corpus", fl_in)->required();
  fl->add_option("-o,--output", fl_out, "Output directory")->required();
  fl->callback([&] {
    action = [&] {
      auto l = load(g);
      if (g.restart) fs::remove_all(fl_out);
      prepare_dir(fl_out, g);
      auto s = filter_corpus(fl_in, l.pc.quality, fl_out, read_mode(g));
      auto m = s.to_json();
      m["rules"] = l.pc.quality.to_json();
      finish_dir(fl_out, l, m);
      std::cout << s.to_json().dump(2) << "\n";
      return 0;
    };
  });

  // dedup
  auto* dd = app.add_subcommand("dedup", "MinHash/LSH near-duplicate removal");
  std::string dd_in, dd_out;
  dd->add_option("corpus", dd_in)->required();
  dd->add_option("-o,--output", dd_out, "Output directory")->required();
  dd->callback([&] {
    action = [&] {
      auto l = load(g);
      if (g.restart) fs::remove_all(dd_out);
      prepare_dir(dd_out, g);
      auto s = dedup_corpus(dd_in, l.pc.dedup, dd_out);
      auto m = s.to_json();
      m["params"] = l.pc.dedup.to_json();
      finish_dir(dd_out, l, m);
      std::cout << s.to_json().dump(2) << "\n";
      return 0;
    };
  });

  // mix
  auto* mx = app.add_subcommand("mix", "Balanced sampling and stage mixture composition");
  std::string mx_out;
  std::optional<std::string> mx_stage;
  std::vector<std::string> mx_sources, mx_budgets, mx_weights;
  std::optional<std::uint64_t> mx_total;
  mx->add_option("-o,--output", mx_out, "Output directory")->required();
  mx->add_option("--stage", mx_stage, "Stage name (default mix.pack_stage)");
  mx->add_option("--source", mx_sources, "name=corpus.jsonl (repeatable; replaces configured sources)");
  mx->add_option("--budget", mx_budgets, "name=tokens");
  mx->add_option("--weight", mx_weights, "name=fraction");
  mx->add_option("--total", mx_total, "Total stage tokens (with weights)");
  mx->callback([&] {
    action = [&] {
      auto l = load(g);
      const std::string stage = mx_stage.value_or(l.pc.pack_stage);
      MixtureSpec spec;
      spec.stage = stage;
      spec.seed = derive_seed(l.pc.seed, "mix");
      spec.shuffle_buffer = l.pc.shuffle_buffer;
      auto kv = [](const std::string& s, const char* flag) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError(std::string(flag) + " " + s + ": expected name=value");
        return std::pair{s.substr(0, eq), s.substr(eq + 1)};
      };
      if (!mx_sources.empty()) {
        for (const auto& s : mx_sources) {
          auto [n, p] = kv(s, "--source");
          spec.entries.push_back({n, p, std::nullopt, std::nullopt});
        }
        auto find = [&](const std::string& n, const char* flag) -> MixtureEntry& {
          for (auto& e : spec.entries) {
            if (e.name == n) return e;
          }
          throw ConfigError(std::string(flag) + ": no source named '" + n + "'");
        };
        for (const auto& s : mx_budgets) {
          auto [n, v] = kv(s, "--budget");
          find(n, "--budget").budget = std::stoull(v);
        }
        for (const auto& s : mx_weights) {
          auto [n, v] = kv(s, "--weight");
          find(n, "--weight").weight = std::stod(v);
        }
        spec.total_tokens = mx_total;
      } else {
        auto it = std::find_if(l.pc.stages.begin(), l.pc.stages.end(), [&](const auto& s) { return s.name == stage; });
        if (it == l.pc.stages.end()) throw ConfigError("--stage: '" + stage + "' is not listed in mix.stages");
        if (it->automatic) throw ConfigError("mix." + stage + ": no sources configured; pass --source name=path");
        spec.total_tokens = mx_total ? mx_total : it->total_tokens;
        for (const auto& [n, ref] : it->sources) {
          if (ref.starts_with("@")) {
            throw ConfigError("mix." + stage + ".source." + n + ": '" + ref + "' only resolves inside `twp pipeline`");
          }
          MixtureEntry e{n, ref, std::nullopt, std::nullopt};
          if (auto b = it->budgets.find(n); b != it->budgets.end()) e.budget = b->second;
          if (auto w = it->weights.find(n); w != it->weights.end()) e.weight = w->second;
          spec.entries.push_back(std::move(e));
        }
      }
      if (g.restart) fs::remove_all(mx_out);
      prepare_dir(mx_out, g);
      auto r = compose_stage(spec, l.pc.counter, mx_out);
      finish_dir(mx_out, l, r.manifest);
      std::cout << r.manifest.dump(2) << "\n";
      return 0;
    };
  });

  // pack
  auto* pk = app.add_subcommand("pack", "EOS-separated fixed-length sequence packing");
  std::optional<std::string> pk_in, pk_out, pk_inspect;
  std::size_t pk_n = 1;
  std::optional<std::uint32_t> pk_len;
  pk->add_option("corpus", pk_in);
  pk->add_option("-o,--output", pk_out, "Packed binary file");
  pk->add_option("--inspect", pk_inspect, "Print the first sequences of a packed file");
  pk->add_option("-n", pk_n, "Sequences to print with --inspect");
  pk->add_option("--length", pk_len, "Sequence length (default pack.sequence_length)");
  pk->callback([&] {
    action = [&] {
      auto l = load(g);
      if (pk_inspect) {
        auto h = read_pack_header(*pk_inspect, pk_len);
        auto seqs = unpack_inspect(*pk_inspect, pk_n, pk_len);
        ordered_json j;
        j["version"] = h.version;
        j["sequence_length"] = h.sequence_length;
        j["sequence_count"] = h.sequence_count;
        j["sequences"] = seqs;
        std::cout << j.dump() << "\n";
        return 0;
      }
      if (!pk_in || !pk_out) throw ConfigError("pack: need a corpus and -o FILE (or --inspect FILE)");
      const std::uint32_t L = pk_len.value_or(l.pc.sequence_length);
      auto m = pack_corpus(*pk_in, l.pc.counter, L, *pk_out);
      auto j = m.to_json();
      j["batch_size"] = l.pc.batch_size;
      j["tokens_per_batch"] = static_cast<std::uint64_t>(L) * l.pc.batch_size;
      auto mpath = fs::path(*pk_out);
      mpath += ".manifest.json";
      write_text(mpath, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return 0;
    };
  });

  // probe
  auto* pr = app.add_subcommand("probe", "Language identification and language-prior probing");
  pr->require_subcommand(1);
  auto* pr_train = pr->add_subcommand("train", "Train the language identifier on the seed corpora");
  std::string pr_model_out;
  pr_train->add_option("-o,--output", pr_model_out, "Model file")->required();
  pr_train->callback([&] {
    action = [&] {
      auto l = load(g);
      auto m = LangIdModel::train_files(l.pc.langid_seeds, l.pc.langid_threshold);
      m.save(pr_model_out);
      std::cout << m.fingerprint() << "\n";
      return 0;
    };
  });
  auto* pr_cls = pr->add_subcommand("classify", "Classify texts (arguments, or lines of --file)");
  std::vector<std::string> pr_texts;
  std::optional<std::string> pr_file;
  pr_cls->add_option("text", pr_texts);
  pr_cls->add_option("--file", pr_file, "One text per line");
  pr_cls->callback([&] {
    action = [&] {
      auto l = load(g);
      auto model = l.pc.load_langid();
      std::vector<std::string> texts = pr_texts;
      if (pr_file) {
        std::ifstream in(*pr_file);
        if (!in) throw IoError("cannot open " + *pr_file);
        std::string line;
        while (std::getline(in, line)) texts.push_back(line);
      }
      for (const auto& t : texts) {
        auto j = model.classify(t).to_json();
        std::cout << j.dump() << "\n";
      }
      return 0;
    };
  });
  auto* pr_det = pr->add_subcommand("detect", "Translation-pair detection on a text file");
  std::string pr_det_file;
  pr_det->add_option("file", pr_det_file)->required();
  pr_det->callback([&] {
    action = [&] {
      auto l = load(g);
      auto model = l.pc.load_langid();
      auto d = detect_translation_pair(read_text(pr_det_file), model, l.pc.detector);
      auto j = d.to_json();
      j["detector_version"] = kPairDetectorVersion;
      std::cout << j.dump() << "\n";
      return 0;
    };
  });
  auto* pr_prior = pr->add_subcommand("prior", "Sample unconditional generations and report language ratios");
  std::optional<std::string> pr_report, pr_evidence;
  pr_prior->add_option("-o,--output", pr_report, "Report JSON (default stdout)");
  pr_prior->add_option("--evidence", pr_evidence, "Per-generation evidence JSONL");
  pr_prior->callback([&] {
    action = [&] {
      auto l = load(g);
      auto model = l.pc.load_langid();
      auto backend = make_backend(l.pc.backend);
      std::unique_ptr<CorpusWriter> ev;
      if (pr_evidence) ev = std::make_unique<CorpusWriter>(*pr_evidence);
      auto rep = probe_prior(*backend, model, l.pc.probe, l.pc.detector, [&](const ordered_json& j) {
        if (ev) ev->write_json(j);
      });
      if (ev) ev->flush();
      auto j = rep.to_json();
      j["backend"] = backend->describe();
      j["langid"] = model.fingerprint();
      emit(j, pr_report);
      return rep.obtained == 0 ? 1 : 0;
    };
  });

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "filter -> dedup -> translate -> mix -> pack");
  std::string pl_in, pl_out;
  pl->add_option("corpus", pl_in)->required();
  pl->add_option("-o,--output", pl_out, "Output directory")->required();
  pl->callback([&] {
    action = [&] {
      auto l = load(g);
      PipelineOptions o{pl_in, pl_out, resume_mode(g), read_mode(g)};
      auto r = run_pipeline(l.config, l.pc, o);
      if (r.exit_code != 0) {
        std::cerr << "twp: stage " << r.failed_stage << " failed: " << r.message << "\n";
        return r.exit_code;
      }
      std::cout << r.manifest.dump(2) << "\n";
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto rest = app.remaining();
    if (!rest.empty() && !rest.front().starts_with("-")) std::cerr << "twp: unknown subcommand '" << rest.front() << "'\n\n";
    else std::cerr << "twp: " << e.what() << "\n\n";
    std::cerr << app.help();
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const ConfigError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << "twp: config: " << d << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    std::cerr << "twp: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "twp: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace twp::cli
