#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "twp/corpus.hpp"

namespace twp {

struct RuleConfig {
  bool word_count = true;
  std::uint64_t min_words = 50;
  std::uint64_t max_words = 100000;

  bool mean_word_length = true;
  double min_mean_word_length = 3.0;
  double max_mean_word_length = 10.0;

  bool symbol_ratio = true;
  double max_symbol_ratio = 0.1;

  bool bullet_lines = true;
  double max_bullet_line_fraction = 0.9;

  bool ellipsis_lines = true;
  double max_ellipsis_line_fraction = 0.3;

  bool alphabetic_words = true;
  double min_alphabetic_word_fraction = 0.8;

  bool stop_words = true;
  std::uint64_t min_stop_words = 2;

  // Repetition rules, off by default.
  bool duplicate_lines = false;
  double max_duplicate_line_fraction = 0.3;
  bool duplicate_paragraphs = false;
  double max_duplicate_paragraph_fraction = 0.3;

  std::map<Lang, std::set<std::string, std::less<>>> stop_word_lists;

  void load_stop_words(Lang lang, const std::filesystem::path& file);
  nlohmann::ordered_json to_json() const;  // active rule set, for manifests
};

struct RuleResult {
  std::string id;
  double value = 0.0;
  bool passed = true;
  bool enabled = true;
};

struct QualityReport {
  std::vector<RuleResult> rules;  // fixed order, all measured
  bool keep = true;
  std::optional<std::string> first_failure;

  nlohmann::ordered_json to_json() const;
};

// Evaluates every rule; verdict is keep iff all enabled rules pass. Throws
// ConfigError when the stop-word rule is on and doc.lang has no list
// (except 'other', which finds zero stop words).
QualityReport gopher_filter(const Document& doc, const RuleConfig& rules);

struct FilterSummary {
  std::uint64_t kept = 0;
  std::uint64_t rejected = 0;
  std::map<std::string, std::uint64_t> first_failures;
  std::uint64_t read_errors = 0;  // malformed input lines skipped (lenient mode)
  nlohmann::ordered_json to_json() const;
};

// Writes kept.jsonl, rejected.jsonl and rejected_reports.jsonl in out_dir,
// preserving input order in each.
FilterSummary filter_corpus(const std::filesystem::path& input, const RuleConfig& rules,
                            const std::filesystem::path& out_dir, ReadMode mode = ReadMode::strict);

}  // namespace twp
