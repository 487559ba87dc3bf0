#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace twp {

class TokenCounter;

enum class Lang { en, fr, de, es, other };

inline constexpr std::array<Lang, 4> kTargetLanguages{Lang::en, Lang::fr, Lang::de, Lang::es};
inline constexpr std::array<Lang, 5> kAllLanguages{Lang::en, Lang::fr, Lang::de, Lang::es, Lang::other};

std::string_view to_string(Lang lang);
std::optional<Lang> parse_lang(std::string_view tag);
// English display name ("French"); "Other" for Lang::other.
std::string_view language_name(Lang lang);

struct Document {
  std::string id;
  Lang lang = Lang::other;
  std::string text;
  std::optional<std::string> source;
  std::optional<std::uint64_t> token_count;

  bool operator==(const Document&) const = default;
};

nlohmann::ordered_json to_json(const Document& doc);
// Throws DataError on a missing/ill-typed field, unknown language tag, empty id
// or invalid UTF-8.
Document document_from_json(const nlohmann::json& j);

struct CorpusHeader {
  std::string tokenizer_fingerprint;
};

struct ReadError {
  std::uint64_t line = 0;
  std::string message;
};

enum class ReadMode { lenient, strict };

// Single-cursor streaming reader over a JSONL corpus. Holds one line in memory
// at a time. In lenient mode malformed lines become ReadError records and are
// skipped; in strict mode the first one throws DataError.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path, ReadMode mode = ReadMode::lenient);

  std::optional<Document> next();

  const std::optional<CorpusHeader>& header() const { return header_; }
  const std::vector<ReadError>& errors() const { return errors_; }
  // Byte offset of the line that produced the most recent document.
  std::uint64_t last_offset() const { return last_offset_; }
  const std::filesystem::path& path() const { return path_; }

  // True when cached token counts were produced by `fingerprint`.
  bool cache_valid_for(std::string_view fingerprint) const {
    return header_ && header_->tokenizer_fingerprint == fingerprint;
  }

 private:
  bool read_line(std::string& line);

  std::filesystem::path path_;
  ReadMode mode_;
  std::ifstream in_;
  std::optional<CorpusHeader> header_;
  std::optional<std::string> pending_;
  std::uint64_t pending_offset_ = 0;
  std::uint64_t offset_ = 0;
  std::uint64_t last_offset_ = 0;
  std::uint64_t line_no_ = 0;
  std::uint64_t pending_line_no_ = 0;
  std::vector<ReadError> errors_;
};

// Reads the document on the line starting at `offset`.
Document read_document_at(std::ifstream& in, std::uint64_t offset);

std::vector<Document> read_all(const std::filesystem::path& path, ReadMode mode = ReadMode::strict);

class CorpusWriter {
 public:
  explicit CorpusWriter(const std::filesystem::path& path,
                        std::optional<CorpusHeader> header = std::nullopt, bool append = false);

  void write(const Document& doc);
  // Arbitrary record on its own line (manifests, failure records).
  void write_json(const nlohmann::ordered_json& record);
  void flush();
  std::uint64_t documents_written() const { return written_; }
  std::uint64_t bytes() const { return bytes_; }

 private:
  void put_line(const std::string& line);

  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t written_ = 0;
  std::uint64_t bytes_ = 0;
};

void write_all(const std::filesystem::path& path, std::span<const Document> docs,
               std::optional<CorpusHeader> header = std::nullopt);

// Token count honouring the document's cache only when the cache is known to
// come from the active tokenizer.
std::uint64_t effective_token_count(const Document& doc, const TokenCounter& counter,
                                    bool cache_valid);

struct LanguageStats {
  std::uint64_t token_total = 0;
  std::uint64_t doc_count = 0;

  double avg_doc_length() const {
    return doc_count == 0 ? 0.0 : static_cast<double>(token_total) / static_cast<double>(doc_count);
  }
  bool operator==(const LanguageStats&) const = default;
};

struct CorpusStats {
  std::map<Lang, LanguageStats> per_language;
  std::string tokenizer_fingerprint;

  LanguageStats overall() const;
  nlohmann::ordered_json to_json() const;
  bool operator==(const CorpusStats&) const = default;
};

class StatsAccumulator {
 public:
  explicit StatsAccumulator(std::string fingerprint) { stats_.tokenizer_fingerprint = std::move(fingerprint); }
  void add(Lang lang, std::uint64_t tokens);
  const CorpusStats& stats() const { return stats_; }

 private:
  CorpusStats stats_;
};

CorpusStats compute_stats(std::span<const Document> docs, const TokenCounter& counter);
CorpusStats compute_stats(CorpusReader& reader, const TokenCounter& counter);

// Number of documents implied by a (token total, average length) row, as in a
// published corpus statistics table.
double implied_doc_count(double token_total, double avg_doc_length);

// |avg x count - total| <= count / 2.
bool stats_row_consistent(double token_total, double avg_doc_length, double doc_count);

}  // namespace twp
