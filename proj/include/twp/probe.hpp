#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twp/backend.hpp"
#include "twp/langid.hpp"

namespace twp {

inline constexpr std::string_view kPairDetectorVersion = "pair-detector-v1";

struct PairDetectorConfig {
  double block_margin = 0.6;       // rule (c): both blocks at least this confident
  std::size_t min_block_chars = 20;
  std::vector<std::string> language_names;  // rule (a); empty = built-in list
};

// Built-in list for rule (a): English names of ~40 languages plus native
// names of the four target languages.
const std::vector<std::string>& default_language_names();

struct PairDetection {
  bool is_pair = false;
  std::string rule;  // "a", "b", "c" or empty
  std::string evidence;
  nlohmann::ordered_json to_json() const;
};

// (a) two lines start with different language names followed by ':';
// (b) a line with a tab whose two sides classify as different languages;
// (c) two adjacent non-empty lines (each >= min_block_chars) classified as
//     different languages, both with margin >= block_margin.
// Rules are tried in that order; the first hit is reported.
PairDetection detect_translation_pair(std::string_view text, const LangIdModel& model,
                                      const PairDetectorConfig& config = {});

struct ProbeParams {
  std::size_t n = 512;
  std::uint32_t max_tokens = 300;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::string prompt;  // the served model's begin-of-sequence convention
  std::size_t max_in_flight = 32;
  RetryPolicy retry;
};

struct PriorReport {
  std::size_t requested = 0;
  std::size_t obtained = 0;
  ProbeParams params;
  std::map<Lang, std::size_t> counts;  // en, fr, de, es, other
  std::size_t translation_pairs = 0;

  double percentage(Lang l) const;
  double translation_pair_percentage() const;
  nlohmann::ordered_json to_json() const;
};

// Requests params.n unconditional generations (concurrently), classifies
// each, and runs the pair detector. Failed requests reduce `obtained`.
// `evidence` receives one record per generation (label, margin, pair hit).
PriorReport probe_prior(Backend& backend, const LangIdModel& model, const ProbeParams& params,
                        const PairDetectorConfig& detector = {},
                        const std::function<void(const nlohmann::ordered_json&)>& evidence = {});

}  // namespace twp
