#include "twp/quality.hpp"

#include <fstream>
#include <unordered_set>

#include "twp/error.hpp"
#include "twp/text.hpp"

namespace twp {

using nlohmann::ordered_json;

void RuleConfig::load_stop_words(Lang lang, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open stop-word list " + file.string());
  auto& set = stop_word_lists[lang];
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    set.insert(text::lowercase(t));
  }
  if (set.empty()) throw ConfigError("stop-word list " + file.string() + " is empty");
}

ordered_json RuleConfig::to_json() const {
  ordered_json j;
  j["word_count"] = {{"enabled", word_count}, {"min", min_words}, {"max", max_words}};
  j["mean_word_length"] = {{"enabled", mean_word_length}, {"min", min_mean_word_length}, {"max", max_mean_word_length}};
  j["symbol_ratio"] = {{"enabled", symbol_ratio}, {"max", max_symbol_ratio}};
  j["bullet_lines"] = {{"enabled", bullet_lines}, {"max", max_bullet_line_fraction}};
  j["ellipsis_lines"] = {{"enabled", ellipsis_lines}, {"max", max_ellipsis_line_fraction}};
  j["alphabetic_words"] = {{"enabled", alphabetic_words}, {"min", min_alphabetic_word_fraction}};
  j["stop_words"] = {{"enabled", stop_words}, {"min", min_stop_words}};
  j["duplicate_lines"] = {{"enabled", duplicate_lines}, {"max", max_duplicate_line_fraction}};
  j["duplicate_paragraphs"] = {{"enabled", duplicate_paragraphs}, {"max", max_duplicate_paragraph_fraction}};
  return j;
}

ordered_json QualityReport::to_json() const {
  ordered_json j;
  j["keep"] = keep;
  j["first_failure"] = first_failure ? ordered_json(*first_failure) : ordered_json(nullptr);
  j["rules"] = ordered_json::array();
  for (const auto& r : rules) {
    j["rules"].push_back({{"id", r.id}, {"value", r.value}, {"passed", r.passed}, {"enabled", r.enabled}});
  }
  return j;
}

ordered_json FilterSummary::to_json() const {
  ordered_json j;
  j["kept"] = kept;
  j["rejected"] = rejected;
  j["first_failures"] = first_failures;
  j["read_errors"] = read_errors;
  return j;
}

namespace {

bool is_bullet(char32_t cp) { return cp == U'•' || cp == U'‣' || cp == U'▪' || cp == U'-' || cp == U'*'; }

std::vector<std::string_view> nonempty_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    auto line = text::trim(s.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (!line.empty()) out.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::vector<std::string_view> paragraphs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  auto push = [&](std::size_t end) {
    auto p = text::trim(s.substr(start, end - start));
    if (!p.empty()) out.push_back(p);
  };
  std::size_t pos = 0;
  while (true) {
    auto nl = s.find('\n', pos);
    if (nl == std::string_view::npos) break;
    // blank line: newline followed by optional whitespace and another newline
    std::size_t q = nl + 1;
    while (q < s.size() && (s[q] == ' ' || s[q] == '\t' || s[q] == '\r')) ++q;
    if (q < s.size() && s[q] == '\n') {
      push(nl);
      start = q + 1;
      pos = q + 1;
    } else {
      pos = nl + 1;
    }
  }
  push(s.size());
  return out;
}

double duplicate_fraction(const std::vector<std::string_view>& items) {
  if (items.empty()) return 0.0;
  std::unordered_set<std::string_view> seen;
  std::size_t dup = 0;
  for (auto i : items) {
    if (!seen.insert(i).second) ++dup;
  }
  return static_cast<double>(dup) / static_cast<double>(items.size());
}

std::string_view strip_nonletters(std::string_view w) {
  std::size_t b = 0;
  while (b < w.size()) {
    auto d = text::decode(w, b);
    if (text::is_letter(d.cp)) break;
    b += d.length;
  }
  std::size_t e = w.size();
  while (e > b) {
    std::size_t p = e - 1;
    while (p > b && (static_cast<unsigned char>(w[p]) & 0xC0) == 0x80) --p;
    if (text::is_letter(text::decode(w, p).cp)) break;
    e = p;
  }
  return w.substr(b, e - b);
}

std::size_t count_substr(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string_view::npos; p = s.find(needle, p + needle.size())) ++n;
  return n;
}

}  // namespace

QualityReport gopher_filter(const Document& doc, const RuleConfig& rc) {
  const std::string_view s = doc.text;
  std::uint64_t words = 0;
  std::uint64_t word_chars = 0;
  std::uint64_t alpha_words = 0;
  std::set<std::string, std::less<>> stops_found;

  const std::set<std::string, std::less<>>* stops = nullptr;
  if (auto it = rc.stop_word_lists.find(doc.lang); it != rc.stop_word_lists.end()) stops = &it->second;
  // 'other' has no list by design: it finds zero stop words and fails the rule.
  if (rc.stop_words && !stops && doc.lang != Lang::other) {
    throw ConfigError("quality.stopwords." + std::string(to_string(doc.lang)) + ": no stop-word list for language '" +
                      std::string(to_string(doc.lang)) + "'");
  }

  text::for_each_word(s, [&](std::string_view w) {
    ++words;
    bool alpha = false;
    for (std::size_t i = 0; i < w.size();) {
      auto d = text::decode(w, i);
      ++word_chars;
      alpha = alpha || text::is_letter(d.cp);
      i += d.length;
    }
    if (alpha) ++alpha_words;
    if (stops) {
      auto core = text::lowercase(strip_nonletters(w));
      if (!core.empty() && stops->contains(core)) stops_found.insert(std::move(core));
    }
  });

  const auto lines = nonempty_lines(s);
  std::size_t bullet = 0;
  std::size_t ellipsis = 0;
  for (auto l : lines) {
    if (is_bullet(text::decode(l, 0).cp)) ++bullet;
    if (l.ends_with("…") || l.ends_with("...")) ++ellipsis;
  }
  const double nwords = static_cast<double>(words);
  const double nlines = static_cast<double>(lines.size());
  const double symbols = static_cast<double>(count_substr(s, "#") + count_substr(s, "…") + count_substr(s, "..."));

  QualityReport rep;
  auto add = [&](std::string id, bool enabled, double value, bool pass) {
    rep.rules.push_back({std::move(id), value, pass, enabled});
    if (enabled && !pass) {
      rep.keep = false;
      if (!rep.first_failure) rep.first_failure = rep.rules.back().id;
    }
  };
  add("word_count", rc.word_count, nwords, words >= rc.min_words && words <= rc.max_words);
  const double mwl = words ? static_cast<double>(word_chars) / nwords : 0.0;
  add("mean_word_length", rc.mean_word_length, mwl, mwl >= rc.min_mean_word_length && mwl <= rc.max_mean_word_length);
  const double sym = words ? symbols / nwords : (symbols > 0 ? 1.0 : 0.0);
  add("symbol_ratio", rc.symbol_ratio, sym, sym <= rc.max_symbol_ratio);
  const double bl = lines.empty() ? 0.0 : static_cast<double>(bullet) / nlines;
  add("bullet_lines", rc.bullet_lines, bl, bl <= rc.max_bullet_line_fraction);
  const double el = lines.empty() ? 0.0 : static_cast<double>(ellipsis) / nlines;
  add("ellipsis_lines", rc.ellipsis_lines, el, el <= rc.max_ellipsis_line_fraction);
  const double aw = words ? static_cast<double>(alpha_words) / nwords : 0.0;
  add("alphabetic_words", rc.alphabetic_words, aw, aw >= rc.min_alphabetic_word_fraction);
  add("stop_words", rc.stop_words, static_cast<double>(stops_found.size()), stops_found.size() >= rc.min_stop_words);
  const double dl = duplicate_fraction(lines);
  add("duplicate_lines", rc.duplicate_lines, dl, dl <= rc.max_duplicate_line_fraction);
  const double dp = duplicate_fraction(paragraphs(s));
  add("duplicate_paragraphs", rc.duplicate_paragraphs, dp, dp <= rc.max_duplicate_paragraph_fraction);
  return rep;
}

FilterSummary filter_corpus(const std::filesystem::path& input, const RuleConfig& rules,
                            const std::filesystem::path& out_dir, ReadMode mode) {
  std::filesystem::create_directories(out_dir);
  CorpusReader reader(input, mode);
  CorpusWriter kept(out_dir / "kept.jsonl");
  CorpusWriter rejected(out_dir / "rejected.jsonl");
  CorpusWriter reports(out_dir / "rejected_reports.jsonl");
  FilterSummary sum;
  while (auto doc = reader.next()) {
    auto rep = gopher_filter(*doc, rules);
    if (rep.keep) {
      kept.write(*doc);
      ++sum.kept;
    } else {
      rejected.write(*doc);
      auto j = rep.to_json();
      j["id"] = doc->id;
      reports.write_json(j);
      ++sum.rejected;
      ++sum.first_failures[*rep.first_failure];
    }
  }
  kept.flush();
  rejected.flush();
  reports.flush();
  // Lenient mode skips malformed lines; keep them visible.
  sum.read_errors = reader.errors().size();
  if (!reader.errors().empty()) {
    CorpusWriter errs(out_dir / "read_errors.jsonl");
    for (const auto& e : reader.errors()) errs.write_json({{"line", e.line}, {"error", e.message}});
    errs.flush();
  }
  return sum;
}

}  // namespace twp
