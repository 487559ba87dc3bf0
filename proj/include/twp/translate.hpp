#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twp/backend.hpp"
#include "twp/corpus.hpp"
#include "twp/segment.hpp"

namespace twp {

class TokenCounter;

// Chat-style translation prompt: "<open> <instruction> <close>", where the
// instruction has {TARGET_LANGUAGE}, {SOURCE_TEXT} and optionally
// {SOURCE_LANGUAGE} slots.
struct PromptTemplate {
  static constexpr std::string_view kDefaultInstruction =
      "Translate the following {SOURCE_LANGUAGE} text into {TARGET_LANGUAGE}. "
      "Output only the {TARGET_LANGUAGE} translation.\n\n{SOURCE_TEXT}";

  std::string wrapper_open = "[INST]";
  std::string wrapper_close = "[/INST]";
  std::string instruction = std::string(kDefaultInstruction);
  std::map<Lang, std::string> overrides;       // per-target instruction text
  std::map<Lang, std::string> language_names;  // display names; default English names

  // Throws ConfigError listing every problem (missing or repeated slots,
  // unknown slot names).
  void validate() const;
  std::string fingerprint() const;
};

// Single-pass substitution: text inserted into a slot is never re-scanned.
std::string build_prompt(std::string_view chunk_text, Lang src, Lang tgt, const PromptTemplate& tpl);

struct TrimResult {
  std::string trimmed;
  std::size_t dropped = 0;
  bool operator==(const TrimResult&) const = default;
};

// Drops trailing sentences that do not end in terminal punctuation. The
// result is a prefix of the left-trimmed input.
TrimResult trim_incomplete(std::string_view raw, Lang lang, const Abbreviations& abbreviations);

enum class RecordStatus { ok, failed, empty };
std::string_view to_string(RecordStatus s);

struct TranslationRecord {
  std::string doc_id;
  Lang target = Lang::other;
  std::size_t chunk_index = 0;
  std::string raw;
  std::string trimmed;
  std::size_t dropped_sentence_count = 0;
  RecordStatus status = RecordStatus::ok;
  std::string error;

  nlohmann::ordered_json to_json() const;
};

struct TranslateOptions {
  std::uint64_t chunk_limit = 300;
  GenerationParams params{600, 0.0, std::nullopt};
  RetryPolicy retry;
  std::size_t max_in_flight = 32;
};

struct DocumentTranslation {
  std::optional<Document> document;  // absent when any chunk failed
  std::vector<TranslationRecord> records;
  std::size_t chunk_count = 0;

  bool failed() const { return !document.has_value(); }
};

// Translates chunk by chunk (concurrently, bounded by `limiter`) and joins the
// trimmed outputs in chunk order with "\n".
DocumentTranslation translate_document(const Document& doc, Lang tgt, Backend& backend,
                                       const PromptTemplate& tpl, const TokenCounter& counter,
                                       const Abbreviations& abbreviations, const TranslateOptions& options,
                                       InFlightLimiter* limiter = nullptr);

enum class ResumeMode { fresh, resume, restart };

struct TranslateCorpusResult {
  std::map<Lang, std::uint64_t> ok;
  std::map<Lang, std::uint64_t> failed;
  std::uint64_t skipped_other_language = 0;
  std::uint64_t resumed_pairs = 0;
  nlohmann::ordered_json manifest;
};

// Writes <out_dir>/<tgt>.jsonl per target plus failures.jsonl, journal.jsonl,
// manifest.json and timing.json. Every finished (doc, target) pair is
// journalled after its output is flushed, so a resumed run truncates outputs
// to the last journalled state and continues. A corrupt journal is refused
// unless restarting.
TranslateCorpusResult translate_corpus(const std::filesystem::path& input, Lang source,
                                       const std::vector<Lang>& targets, Backend& backend,
                                       const PromptTemplate& tpl, const TokenCounter& counter,
                                       const Abbreviations& abbreviations, const TranslateOptions& options,
                                       const std::filesystem::path& out_dir, ResumeMode mode);

}  // namespace twp
