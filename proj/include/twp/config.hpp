#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twp/backend.hpp"
#include "twp/dedup.hpp"
#include "twp/langid.hpp"
#include "twp/probe.hpp"
#include "twp/quality.hpp"
#include "twp/segment.hpp"
#include "twp/tokenizer.hpp"
#include "twp/translate.hpp"

namespace twp {

// Flat "key = value" settings. Later layers override earlier ones:
// built-in defaults < config file < TWP_* environment < command line.
//
// File syntax: one setting per line, '#' starts a comment, values may be
// double-quoted with \n \t \" \\ escapes. Relative paths in a file resolve
// against the file's directory.
class Config {
 public:
  struct Entry {
    std::string value;
    std::string origin;  // "default", file path, "env:NAME" or "cli"
  };

  static Config defaults();

  void load_file(const std::filesystem::path& path);
  void parse(std::string_view content, const std::filesystem::path& base_dir, const std::string& origin);
  // Applies TWP_<KEY> for every key already present; '.' and '-' map to '_'.
  void apply_env();
  void set(const std::string& key, std::string value, std::string origin = "cli");

  std::optional<std::string> get(std::string_view key) const;
  const std::map<std::string, Entry, std::less<>>& entries() const { return entries_; }

  // Sorted, fully quoted "key = value" lines; parseable by parse().
  std::string snapshot() const;

  static std::string env_name(std::string_view key);
  static bool is_path_key(std::string_view key);

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

struct StageMixConfig {
  std::string name;
  std::vector<std::pair<std::string, std::string>> sources;  // name -> path or "@lang"
  std::map<std::string, std::uint64_t> budgets;
  std::map<std::string, double> weights;
  std::optional<std::uint64_t> total_tokens;
  bool automatic = false;  // no sources configured: four languages, equal budgets
};

// Typed, validated view of a Config with its resources (tokenizer,
// abbreviation and stop-word lists) loaded.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 0;

  TokenCounter counter = TokenCounter::whitespace();
  std::uint64_t chunk_limit = 300;
  Abbreviations abbreviations;

  bool translate_enabled = true;
  Lang source = Lang::en;
  std::vector<Lang> targets;
  PromptTemplate prompt;
  TranslateOptions translate;
  BackendConfig backend;

  RuleConfig quality;
  DedupParams dedup;

  std::vector<StageMixConfig> stages;
  std::string pack_stage;
  std::size_t shuffle_buffer = 100000;

  std::uint32_t sequence_length = 2048;
  std::uint32_t batch_size = 1024;

  ProbeParams probe;
  PairDetectorConfig detector;
  double langid_threshold = 0.15;
  std::filesystem::path langid_model;
  std::map<Lang, std::filesystem::path> langid_seeds;

  // Throws ConfigError with one diagnostic per bad field.
  static PipelineConfig resolve(const Config& config);

  // Loads langid_model if set, otherwise trains on the seed corpora.
  LangIdModel load_langid() const;
};

// Defaults + optional file + environment, then `overrides` (from flags).
Config load_config(const std::optional<std::filesystem::path>& file,
                   const std::vector<std::pair<std::string, std::string>>& overrides = {});

}  // namespace twp
