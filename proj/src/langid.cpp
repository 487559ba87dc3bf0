#include "twp/langid.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "twp/error.hpp"
#include "twp/hash.hpp"
#include "twp/text.hpp"

namespace twp {

using nlohmann::ordered_json;

namespace {

std::string to_utf8(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) text::append_utf8(out, c);
  return out;
}

std::u32string from_utf8(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    auto d = text::decode(s, i);
    out.push_back(d.cp);
    i += d.length;
  }
  return out;
}

template <class F>
void for_each_gram(const std::u32string& s, F&& f) {
  for (std::size_t n = 1; n <= LangIdModel::kMaxOrder; ++n) {
    if (s.size() < n) break;
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      // A lone padding space carries no evidence.
      if (n == 1 && s[i] == U' ') continue;
      f(n, std::u32string_view(s).substr(i, n));
    }
  }
}

}  // namespace

ordered_json LangScore::to_json() const {
  ordered_json j;
  j["label"] = to_string(label);
  j["top"] = to_string(top);
  j["margin"] = std::isfinite(margin) ? ordered_json(margin) : ordered_json(nullptr);
  j["letters"] = letters;
  j["low_confidence"] = low_confidence;
  ordered_json lp = ordered_json::object();
  for (const auto& [l, v] : log_prob) lp[std::string(to_string(l))] = v;
  j["log_prob"] = lp;
  return j;
}

std::u32string LangIdModel::prepare(std::string_view s) {
  std::u32string out = U" ";
  for (std::size_t i = 0; i < s.size();) {
    auto d = text::decode(s, i);
    i += d.length;
    if (text::is_letter(d.cp)) {
      out.push_back(text::to_lower(d.cp));
    } else if (out.back() != U' ') {
      out.push_back(U' ');
    }
  }
  if (out.back() != U' ') out.push_back(U' ');
  return out;
}

LangIdModel LangIdModel::train(const std::map<Lang, std::string>& seeds, double margin_threshold,
                               std::size_t min_chars) {
  if (seeds.empty()) throw ConfigError("langid: no seed corpora");
  std::vector<std::string> diags;
  for (const auto& [lang, s] : seeds) {
    if (lang == Lang::other) diags.push_back("langid: cannot train the 'other' label");
    const auto n = text::length(s);
    if (n < min_chars) {
      diags.push_back("langid.seed." + std::string(to_string(lang)) + ": " + std::to_string(n) +
                      " characters, need at least " + std::to_string(min_chars));
    }
  }
  if (!diags.empty()) throw ConfigError(std::move(diags));
  LangIdModel m;
  m.threshold_ = margin_threshold;
  for (const auto& [lang, s] : seeds) {
    auto& lm = m.models_[lang];
    // Line by line so that n-grams never span two unrelated lines.
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) {
      auto p = prepare(line);
      if (p.size() <= 1) continue;
      for_each_gram(p, [&](std::size_t n, std::u32string_view g) {
        ++lm.counts[std::u32string(g)];
        ++lm.totals[n - 1];
      });
    }
  }
  m.finalize();
  return m;
}

LangIdModel LangIdModel::train_files(const std::map<Lang, std::filesystem::path>& seeds, double margin_threshold) {
  std::map<Lang, std::string> texts;
  for (const auto& [lang, p] : seeds) {
    std::ifstream in(p);
    if (!in) throw ConfigError("langid.seed." + std::string(to_string(lang)) + ": cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    texts[lang] = ss.str();
  }
  return train(texts, margin_threshold);
}

void LangIdModel::finalize() {
  std::array<std::set<std::u32string>, kMaxOrder> seen;
  for (const auto& [lang, lm] : models_) {
    for (const auto& [g, c] : lm.counts) seen[g.size() - 1].insert(g);
  }
  for (std::size_t n = 0; n < kMaxOrder; ++n) vocab_[n] = seen[n].size();
}

LangScore LangIdModel::classify(std::string_view text) const {
  LangScore sc;
  const auto p = prepare(text);
  for (char32_t c : p) sc.letters += c != U' ';
  sc.low_confidence = text::length(text::trim(text)) < kShortText;
  for (const auto& [lang, lm] : models_) {
    double lp = 0.0;
    for_each_gram(p, [&](std::size_t n, std::u32string_view g) {
      auto it = lm.counts.find(std::u32string(g));
      const double c = it == lm.counts.end() ? 0.0 : static_cast<double>(it->second);
      lp += std::log((c + 1.0) / (static_cast<double>(lm.totals[n - 1]) + static_cast<double>(vocab_[n - 1])));
    });
    sc.log_prob[lang] = lp;
  }
  if (sc.letters == 0 || models_.empty()) {
    sc.margin = 0.0;
    sc.label = Lang::other;
    return sc;
  }
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  for (const auto& [lang, lp] : sc.log_prob) {
    if (lp > best) {
      second = best;
      best = lp;
      sc.top = lang;
    } else if (lp > second) {
      second = lp;
    }
  }
  sc.margin = models_.size() == 1 ? std::numeric_limits<double>::infinity()
                                  : (best - second) / static_cast<double>(sc.letters);
  sc.label = sc.margin >= threshold_ ? sc.top : Lang::other;
  return sc;
}

std::vector<Lang> LangIdModel::languages() const {
  std::vector<Lang> out;
  for (const auto& [l, m] : models_) out.push_back(l);
  return out;
}

std::string LangIdModel::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& [lang, lm] : models_) {
    h = fnv1a64(to_string(lang), h);
    for (auto t : lm.totals) h = fmix64(h ^ t);
    h = fmix64(h ^ lm.counts.size());
  }
  return "langid-" + hex64(h);
}

void LangIdModel::save(const std::filesystem::path& path) const {
  ordered_json j;
  j["format"] = "twp-langid";
  j["version"] = 1;
  j["max_order"] = kMaxOrder;
  j["margin_threshold"] = threshold_;
  j["languages"] = ordered_json::object();
  for (const auto& [lang, lm] : models_) {
    ordered_json l;
    l["totals"] = lm.totals;
    // Sorted for a byte-stable file.
    std::map<std::string, std::uint64_t> sorted;
    for (const auto& [g, c] : lm.counts) sorted.emplace(to_utf8(g), c);
    l["counts"] = sorted;
    j["languages"][std::string(to_string(lang))] = l;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
}

LangIdModel LangIdModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open language model " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "twp-langid") {
    throw DataError(path.string() + ": not a language model file");
  }
  if (j.value("version", 0) != 1) throw DataError(path.string() + ": unsupported model version");
  LangIdModel m;
  m.threshold_ = j.value("margin_threshold", 0.15);
  for (auto& [tag, l] : j.at("languages").items()) {
    auto lang = parse_lang(tag);
    if (!lang || *lang == Lang::other) throw DataError(path.string() + ": bad language '" + tag + "'");
    auto& lm = m.models_[*lang];
    lm.totals = l.at("totals").get<std::array<std::uint64_t, kMaxOrder>>();
    for (auto& [g, c] : l.at("counts").items()) lm.counts.emplace(from_utf8(g), c.get<std::uint64_t>());
  }
  m.finalize();
  return m;
}

}  // namespace twp
