#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "twp/corpus.hpp"

namespace twp {

struct LangScore {
  std::map<Lang, double> log_prob;  // total log-probability per trained language
  Lang label = Lang::other;
  Lang top = Lang::other;           // best language before the margin test
  double margin = 0.0;              // (best - second best) / letters, nats per character
  std::size_t letters = 0;
  bool low_confidence = false;      // fewer than 20 characters of input

  nlohmann::ordered_json to_json() const;
};

// Character 1-3-gram multinomial naive Bayes with add-one smoothing. Text is
// lowercased, non-letters become spaces, runs of spaces collapse, and the
// result is padded with one space on each side.
class LangIdModel {
 public:
  static constexpr std::size_t kMaxOrder = 3;
  static constexpr std::size_t kMinTrainingChars = 10000;
  static constexpr std::size_t kShortText = 20;

  static LangIdModel train(const std::map<Lang, std::string>& seeds, double margin_threshold = 0.15,
                           std::size_t min_chars = kMinTrainingChars);
  static LangIdModel train_files(const std::map<Lang, std::filesystem::path>& seeds, double margin_threshold = 0.15);
  static LangIdModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  LangScore classify(std::string_view text) const;

  double margin_threshold() const { return threshold_; }
  void set_margin_threshold(double t) { threshold_ = t; }
  std::vector<Lang> languages() const;
  std::string fingerprint() const;

  // Normalized, padded code-point sequence used for n-gram extraction.
  static std::u32string prepare(std::string_view text);

 private:
  struct LangModel {
    std::array<std::uint64_t, kMaxOrder> totals{};
    std::unordered_map<std::u32string, std::uint64_t> counts;
  };
  void finalize();

  double threshold_ = 0.15;
  std::map<Lang, LangModel> models_;
  std::array<std::uint64_t, kMaxOrder> vocab_{};  // distinct n-grams per order over all languages
};

}  // namespace twp
