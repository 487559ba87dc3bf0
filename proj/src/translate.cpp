#include "twp/translate.hpp"

#include <chrono>
#include <deque>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "twp/error.hpp"
#include "twp/hash.hpp"
#include "twp/text.hpp"
#include "twp/tokenizer.hpp"

namespace twp {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSlotTarget = "{TARGET_LANGUAGE}";
constexpr std::string_view kSlotSource = "{SOURCE_LANGUAGE}";
constexpr std::string_view kSlotText = "{SOURCE_TEXT}";

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) ++n;
  return n;
}

std::string display_name(const PromptTemplate& tpl, Lang l) {
  auto it = tpl.language_names.find(l);
  return it != tpl.language_names.end() ? it->second : std::string(language_name(l));
}

void check_instruction(std::string_view where, std::string_view instr, std::vector<std::string>& diags) {
  const auto n = count_occurrences(instr, kSlotText);
  if (n != 1) {
    diags.push_back(std::string(where) + ": must contain {SOURCE_TEXT} exactly once (found " + std::to_string(n) + ")");
  }
  if (count_occurrences(instr, kSlotTarget) == 0) {
    diags.push_back(std::string(where) + ": missing {TARGET_LANGUAGE} slot");
  }
  // Any other {UPPER_CASE} token is most likely a typo for a slot.
  for (std::size_t p = instr.find('{'); p != std::string_view::npos; p = instr.find('{', p + 1)) {
    auto q = instr.find('}', p);
    if (q == std::string_view::npos) break;
    auto name = instr.substr(p, q - p + 1);
    bool slotlike = name.size() > 2;
    for (char c : name.substr(1, name.size() - 2)) slotlike = slotlike && ((c >= 'A' && c <= 'Z') || c == '_');
    if (slotlike && name != kSlotTarget && name != kSlotSource && name != kSlotText) {
      diags.push_back(std::string(where) + ": unknown slot " + std::string(name));
    }
  }
}

}  // namespace

void PromptTemplate::validate() const {
  std::vector<std::string> diags;
  check_instruction("translate.template.instruction", instruction, diags);
  for (const auto& [lang, instr] : overrides) {
    if (lang == Lang::other) diags.push_back("translate.template: override for 'other' is not allowed");
    check_instruction("translate.template." + std::string(to_string(lang)) + ".instruction", instr, diags);
  }
  if (!diags.empty()) throw ConfigError(std::move(diags));
}

std::string PromptTemplate::fingerprint() const {
  std::uint64_t h = fnv1a64(wrapper_open);
  h = fnv1a64(wrapper_close, h ^ 1);
  h = fnv1a64(instruction, h ^ 2);
  for (const auto& [l, s] : overrides) h = fnv1a64(s, fnv1a64(to_string(l), h));
  for (const auto& [l, s] : language_names) h = fnv1a64(s, fnv1a64(to_string(l), h ^ 3));
  return hex64(h);
}

std::string build_prompt(std::string_view chunk_text, Lang src, Lang tgt, const PromptTemplate& tpl) {
  if (tgt == Lang::other) throw ConfigError("cannot translate into 'other'");
  if (src == tgt) throw ConfigError("source and target language are both " + std::string(to_string(src)));
  auto ov = tpl.overrides.find(tgt);
  std::string_view instr = ov != tpl.overrides.end() ? std::string_view(ov->second) : std::string_view(tpl.instruction);

  const std::string tgt_name = display_name(tpl, tgt);
  const std::string src_name = display_name(tpl, src);
  std::string body;
  body.reserve(instr.size() + chunk_text.size() + 32);
  std::size_t text_slots = 0;
  for (std::size_t i = 0; i < instr.size();) {
    auto rest = instr.substr(i);
    if (rest.starts_with(kSlotText)) {
      body += chunk_text;
      ++text_slots;
      i += kSlotText.size();
    } else if (rest.starts_with(kSlotTarget)) {
      body += tgt_name;
      i += kSlotTarget.size();
    } else if (rest.starts_with(kSlotSource)) {
      body += src_name;
      i += kSlotSource.size();
    } else {
      body += instr[i++];
    }
  }
  if (text_slots != 1) throw ConfigError("prompt template must contain {SOURCE_TEXT} exactly once");

  std::string out = tpl.wrapper_open;
  if (!out.empty()) out += ' ';
  out += body;
  if (!tpl.wrapper_close.empty()) {
    out += ' ';
    out += tpl.wrapper_close;
  }
  return out;
}

TrimResult trim_incomplete(std::string_view raw, Lang lang, const Abbreviations& abbreviations) {
  auto sentences = split_sentences(raw, lang, abbreviations);
  std::size_t keep = sentences.size();
  while (keep > 0 && !sentences[keep - 1].terminal) --keep;
  TrimResult r;
  r.dropped = sentences.size() - keep;
  if (keep > 0) {
    const std::size_t b = sentences.front().begin;
    r.trimmed = std::string(raw.substr(b, sentences[keep - 1].end - b));
  }
  return r;
}

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::ok: return "ok";
    case RecordStatus::failed: return "failed";
    case RecordStatus::empty: return "empty";
  }
  return "failed";
}

ordered_json TranslationRecord::to_json() const {
  ordered_json j;
  j["doc_id"] = doc_id;
  j["target"] = twp::to_string(target);
  j["chunk_index"] = chunk_index;
  j["status"] = twp::to_string(status);
  j["raw"] = raw;
  j["trimmed"] = trimmed;
  j["dropped_sentence_count"] = dropped_sentence_count;
  if (!error.empty()) j["error"] = error;
  return j;
}

DocumentTranslation translate_document(const Document& doc, Lang tgt, Backend& backend, const PromptTemplate& tpl,
                                       const TokenCounter& counter, const Abbreviations& abbreviations,
                                       const TranslateOptions& options, InFlightLimiter* limiter) {
  auto chunks = chunk_document(doc, counter, abbreviations, options.chunk_limit);
  DocumentTranslation out;
  out.chunk_count = chunks.size();

  std::vector<std::future<CompletionResult>> pending;
  pending.reserve(chunks.size());
  for (const auto& c : chunks) {
    CompletionRequest req{build_prompt(c.text, doc.lang, tgt, tpl), c.text, options.params};
    pending.push_back(std::async(std::launch::async, [&backend, &options, limiter, req = std::move(req)] {
      return complete_with_retry(backend, req, options.retry, limiter);
    }));
  }

  bool failed = false;
  std::string joined;
  bool first = true;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    TranslationRecord rec;
    rec.doc_id = doc.id;
    rec.target = tgt;
    rec.chunk_index = i;
    auto result = pending[i].get();
    if (auto* f = std::get_if<BackendFailure>(&result)) {
      rec.status = RecordStatus::failed;
      rec.error = f->message;
      failed = true;
    } else {
      rec.raw = std::get<std::string>(std::move(result));
      auto t = trim_incomplete(rec.raw, tgt, abbreviations);
      rec.trimmed = std::move(t.trimmed);
      rec.dropped_sentence_count = t.dropped;
      if (rec.trimmed.empty()) {
        rec.status = RecordStatus::empty;
      } else {
        if (!first) joined += '\n';
        joined += rec.trimmed;
        first = false;
      }
    }
    out.records.push_back(std::move(rec));
  }
  if (!failed) {
    Document d;
    d.id = doc.id + ":" + std::string(to_string(tgt));
    d.lang = tgt;
    d.text = std::move(joined);
    d.source = doc.source ? *doc.source : doc.id;
    out.document = std::move(d);
  }
  return out;
}

namespace {

struct TargetTally {
  std::uint64_t ok = 0;
  std::uint64_t failed = 0;
  std::uint64_t chunks = 0;
  std::uint64_t empty_chunks = 0;
  std::uint64_t dropped_sentences = 0;
};

struct JournalState {
  std::set<std::pair<std::string, Lang>> done;
  std::map<Lang, std::uint64_t> out_bytes;
  std::uint64_t fail_bytes = 0;
  std::uint64_t valid_bytes = 0;  // length of the journal prefix to keep
  bool header_only_torn = false;  // killed while writing the header: start over
  std::map<Lang, TargetTally> tally;
};

ordered_json journal_header(Lang source, const std::vector<Lang>& targets, const PromptTemplate& tpl,
                            const TokenCounter& counter, const TranslateOptions& options) {
  ordered_json h;
  h["_journal"] = true;
  h["version"] = 1;
  h["source"] = to_string(source);
  h["targets"] = ordered_json::array();
  for (Lang t : targets) h["targets"].push_back(to_string(t));
  h["template"] = tpl.fingerprint();
  h["tokenizer_fingerprint"] = counter.fingerprint();
  h["chunk_limit"] = options.chunk_limit;
  return h;
}

template <class J>
void apply_entry(JournalState& st, const J& e) {
  auto lang = parse_lang(e.at("target").template get<std::string>());
  if (!lang) throw DataError("unknown target in journal entry");
  const auto status = e.at("status").template get<std::string>();
  auto& t = st.tally[*lang];
  if (status == "ok") ++t.ok;
  else if (status == "failed") ++t.failed;
  else throw DataError("unknown status '" + status + "'");
  t.chunks += e.at("chunks").template get<std::uint64_t>();
  t.empty_chunks += e.at("empty_chunks").template get<std::uint64_t>();
  t.dropped_sentences += e.at("dropped_sentences").template get<std::uint64_t>();
  st.done.emplace(e.at("doc").template get<std::string>(), *lang);
  st.out_bytes[*lang] = e.at("out_bytes").template get<std::uint64_t>();
  st.fail_bytes = e.at("fail_bytes").template get<std::uint64_t>();
}

JournalState load_journal(const fs::path& path, const ordered_json& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string all = ss.str();

  JournalState st;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto corrupt = [&](const std::string& why) {
    return DataError(path.string() + ":" + std::to_string(line_no) + ": journal is corrupt (" + why +
                     "); rerun with --restart");
  };
  while (pos < all.size()) {
    auto nl = all.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final write: ignored and truncated
    ++line_no;
    std::string_view line(all.data() + pos, nl - pos);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw corrupt("unparsable line");
    if (line_no == 1) {
      if (!j.value("_journal", false)) throw corrupt("missing header");
      if (json::parse(expected_header.dump()) != j) {
        throw ConfigError("journal " + path.string() +
                          " was written with different settings (source, targets, template, tokenizer or chunk "
                          "limit); rerun with --restart");
      }
    } else {
      try {
        apply_entry(st, j);
      } catch (const std::exception& e) {
        throw corrupt(e.what());
      }
    }
    pos = nl + 1;
    st.valid_bytes = pos;
  }
  if (line_no == 0) st.header_only_torn = true;
  return st;
}

void truncate_to(const fs::path& p, std::uint64_t size) {
  if (!fs::exists(p)) {
    if (size != 0) throw DataError(p.string() + " is missing but the journal records " + std::to_string(size) + " bytes; rerun with --restart");
    std::ofstream(p, std::ios::binary);
    return;
  }
  if (fs::file_size(p) < size) {
    throw DataError(p.string() + " is shorter than the journal records; rerun with --restart");
  }
  fs::resize_file(p, size);
}

}  // namespace

TranslateCorpusResult translate_corpus(const fs::path& input, Lang source, const std::vector<Lang>& targets,
                                       Backend& backend, const PromptTemplate& tpl, const TokenCounter& counter,
                                       const Abbreviations& abbreviations, const TranslateOptions& options,
                                       const fs::path& out_dir, ResumeMode mode) {
  tpl.validate();
  if (targets.empty()) throw ConfigError("translate: no target languages");
  for (Lang t : targets) {
    if (t == Lang::other) throw ConfigError("translate: 'other' is not a valid target");
    if (t == source) throw ConfigError("translate: target equals source language " + std::string(to_string(t)));
  }
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  const fs::path journal_path = out_dir / "journal.jsonl";
  const fs::path fail_path = out_dir / "failures.jsonl";
  auto target_path = [&](Lang t) { return out_dir / (std::string(to_string(t)) + ".jsonl"); };
  const ordered_json header = journal_header(source, targets, tpl, counter, options);

  JournalState st;
  bool append = false;
  if (fs::exists(journal_path)) {
    if (mode == ResumeMode::fresh) {
      throw ConfigError(out_dir.string() + " already holds a translation journal; pass --resume or --restart");
    }
    if (mode == ResumeMode::resume) {
      st = load_journal(journal_path, header);
      if (st.header_only_torn) {
        st = {};
      } else {
        fs::resize_file(journal_path, st.valid_bytes);
        for (Lang t : targets) truncate_to(target_path(t), st.out_bytes[t]);
        truncate_to(fail_path, st.fail_bytes);
        append = true;
      }
    }
  }
  const std::uint64_t resumed = st.done.size();

  std::map<Lang, std::unique_ptr<CorpusWriter>> writers;
  for (Lang t : targets) writers[t] = std::make_unique<CorpusWriter>(target_path(t), std::nullopt, append);
  CorpusWriter failures(fail_path, std::nullopt, append);
  std::ofstream journal(journal_path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!journal) throw IoError("cannot open " + journal_path.string());
  if (!append) journal << header.dump() << '\n' << std::flush;

  InFlightLimiter limiter(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options.max_in_flight)));
  struct Job {
    std::string doc_id;
    Lang target;
    std::future<DocumentTranslation> result;
  };
  std::deque<Job> window;
  std::uint64_t chunks_this_run = 0;
  std::uint64_t pairs_this_run = 0;

  auto commit = [&](Job& job) {
    DocumentTranslation tr = job.result.get();
    std::uint64_t empty = 0;
    std::uint64_t dropped = 0;
    for (const auto& r : tr.records) {
      if (r.status == RecordStatus::empty) ++empty;
      dropped += r.dropped_sentence_count;
      if (r.status != RecordStatus::ok) failures.write_json(r.to_json());
    }
    if (tr.document) writers[job.target]->write(*tr.document);
    writers[job.target]->flush();
    failures.flush();
    ordered_json e;
    e["doc"] = job.doc_id;
    e["target"] = to_string(job.target);
    e["status"] = tr.failed() ? "failed" : "ok";
    e["chunks"] = tr.chunk_count;
    e["empty_chunks"] = empty;
    e["dropped_sentences"] = dropped;
    e["out_bytes"] = writers[job.target]->bytes();
    e["fail_bytes"] = failures.bytes();
    journal << e.dump() << '\n' << std::flush;
    if (!journal) throw IoError("journal write failed");
    apply_entry(st, e);
    chunks_this_run += tr.chunk_count;
    ++pairs_this_run;
  };

  const std::size_t window_size = std::max<std::size_t>(1, options.max_in_flight);
  TranslateCorpusResult result;
  CorpusReader reader(input, ReadMode::strict);
  std::set<std::string> seen;
  while (auto doc = reader.next()) {
    if (!seen.insert(doc->id).second) throw DataError(input.string() + ": duplicate document id '" + doc->id + "'");
    if (doc->lang != source) {
      ++result.skipped_other_language;
      continue;
    }
    auto shared = std::make_shared<const Document>(std::move(*doc));
    for (Lang t : targets) {
      if (st.done.contains({shared->id, t})) continue;
      window.push_back({shared->id, t, std::async(std::launch::async, [&, shared, t] {
                          return translate_document(*shared, t, backend, tpl, counter, abbreviations, options,
                                                    &limiter);
                        })});
      while (window.size() >= window_size) {
        commit(window.front());
        window.pop_front();
      }
    }
  }
  while (!window.empty()) {
    commit(window.front());
    window.pop_front();
  }
  for (auto& [t, w] : writers) w->flush();

  ordered_json m;
  m["input"] = input.string();
  m["source"] = to_string(source);
  m["backend"] = backend.describe();
  m["template"] = tpl.fingerprint();
  m["tokenizer_fingerprint"] = counter.fingerprint();
  m["chunk_limit"] = options.chunk_limit;
  m["max_tokens"] = options.params.max_tokens;
  m["temperature"] = options.params.temperature;
  m["join_separator"] = "\\n";
  m["skipped_other_language"] = result.skipped_other_language;
  std::uint64_t total_ok = 0;
  std::uint64_t total_failed = 0;
  m["targets"] = ordered_json::object();
  for (Lang t : targets) {
    const auto& tally = st.tally[t];
    ordered_json r;
    r["ok"] = tally.ok;
    r["failed"] = tally.failed;
    r["chunks"] = tally.chunks;
    r["empty_chunks"] = tally.empty_chunks;
    r["dropped_sentences"] = tally.dropped_sentences;
    m["targets"][std::string(to_string(t))] = r;
    result.ok[t] = tally.ok;
    result.failed[t] = tally.failed;
    total_ok += tally.ok;
    total_failed += tally.failed;
  }
  m["ok"] = total_ok;
  m["failed"] = total_failed;
  result.resumed_pairs = resumed;
  result.manifest = m;
  {
    std::ofstream mf(out_dir / "manifest.json");
    mf << m.dump(2) << '\n';
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ordered_json timing;
  timing["seconds"] = secs;
  timing["pairs_this_run"] = pairs_this_run;
  timing["pairs_resumed"] = resumed;
  timing["chunks_this_run"] = chunks_this_run;
  timing["pairs_per_second"] = secs > 0 ? static_cast<double>(pairs_this_run) / secs : 0.0;
  timing["chunks_per_second"] = secs > 0 ? static_cast<double>(chunks_this_run) / secs : 0.0;
  std::ofstream tf(out_dir / "timing.json");
  tf << timing.dump(2) << '\n';
  return result;
}

}  // namespace twp
