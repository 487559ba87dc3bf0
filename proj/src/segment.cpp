#include "twp/segment.hpp"

#include <fstream>

#include "twp/error.hpp"
#include "twp/text.hpp"
#include "twp/tokenizer.hpp"

namespace twp {

namespace {

bool is_terminal_mark(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'…'; }

bool is_closer(char32_t cp) {
  switch (cp) {
    case U'"': case U'\'': case U'”': case U'’': case U'»': case U'›':
    case U')': case U']': case U'}':
      return true;
    default:
      return false;
  }
}

bool is_opener(char32_t cp) {
  switch (cp) {
    case U'"': case U'\'': case U'“': case U'‘': case U'„': case U'«': case U'‹':
    case U'(': case U'[': case U'{': case U'¿': case U'¡':
      return true;
    default:
      return false;
  }
}

// Start of the code point preceding byte offset `pos`.
std::size_t prev_cp(std::string_view s, std::size_t pos) {
  std::size_t p = pos - 1;
  while (p > 0 && (static_cast<unsigned char>(s[p]) & 0xC0) == 0x80) --p;
  return p;
}

}  // namespace

void Abbreviations::add(Lang lang, std::string abbreviation) {
  auto t = std::string(text::trim(abbreviation));
  if (!t.empty()) lists_[lang].insert(std::move(t));
}

void Abbreviations::load(Lang lang, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open abbreviation list " + file.string());
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    add(lang, std::string(t));
  }
}

Abbreviations Abbreviations::load_dir(const std::filesystem::path& dir) {
  Abbreviations a;
  for (Lang l : kTargetLanguages) {
    auto p = dir / (std::string(to_string(l)) + ".txt");
    if (std::filesystem::exists(p)) a.load(l, p);
  }
  return a;
}

bool Abbreviations::contains(Lang lang, std::string_view token) const {
  auto it = lists_.find(lang);
  if (it == lists_.end() || token.empty()) return false;
  if (it->second.contains(token)) return true;
  // Sentence-initial capitalisation of a lowercase entry ("Etc." for "etc.").
  auto d = text::decode(token, 0);
  std::string lowered;
  text::append_utf8(lowered, text::to_lower(d.cp));
  lowered.append(token.substr(d.length));
  return lowered != token && it->second.contains(lowered);
}

std::size_t Abbreviations::size(Lang lang) const {
  auto it = lists_.find(lang);
  return it == lists_.end() ? 0 : it->second.size();
}

namespace {

// The word after position `pos` (skipping spaces, not blank lines), openers stripped.
std::string_view next_word(std::string_view s, std::size_t pos) {
  int newlines = 0;
  while (pos < s.size()) {
    auto e = text::decode(s, pos);
    if (!text::is_whitespace(e.cp)) break;
    if (e.cp == U'\n' && ++newlines >= 2) return {};
    pos += e.length;
  }
  std::size_t end = pos;
  while (end < s.size()) {
    auto e = text::decode(s, end);
    if (text::is_whitespace(e.cp)) break;
    end += e.length;
  }
  auto w = s.substr(pos, end - pos);
  while (!w.empty()) {
    auto e = text::decode(w, 0);
    if (!is_opener(e.cp)) break;
    w.remove_prefix(e.length);
  }
  return w;
}

bool is_number(std::string_view w) {
  if (w.empty()) return false;
  for (char c : w) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

bool ends_terminal(std::string_view s) {
  std::size_t end = s.size();
  while (end > 0) {
    std::size_t p = prev_cp(s, end);
    char32_t cp = text::decode(s, p).cp;
    if (is_closer(cp)) {
      end = p;
      continue;
    }
    return is_terminal_mark(cp);
  }
  return false;
}

std::vector<Sentence> split_sentences(std::string_view s, Lang lang, const Abbreviations& abbreviations) {
  std::vector<Sentence> out;
  std::size_t start = std::string_view::npos;  // first byte of the open sentence
  std::size_t word_start = std::string_view::npos;

  auto close = [&](std::size_t end) {
    if (start == std::string_view::npos) return;
    auto t = text::trim(s.substr(start, end - start));
    if (!t.empty()) {
      std::size_t b = static_cast<std::size_t>(t.data() - s.data());
      out.push_back({std::string(t), b, b + t.size(), ends_terminal(t)});
    }
    start = std::string_view::npos;
  };

  std::size_t i = 0;
  while (i < s.size()) {
    auto d = text::decode(s, i);
    if (text::is_whitespace(d.cp)) {
      // Consume the whole whitespace run; two newlines in it make a blank line.
      std::size_t j = i;
      int newlines = 0;
      while (j < s.size()) {
        auto e = text::decode(s, j);
        if (!text::is_whitespace(e.cp)) break;
        if (e.cp == U'\n') ++newlines;
        j += e.length;
      }
      if (newlines >= 2) close(i);
      word_start = std::string_view::npos;
      i = j;
      continue;
    }
    if (start == std::string_view::npos) start = i;
    if (word_start == std::string_view::npos) word_start = i;

    if (!is_terminal_mark(d.cp)) {
      i += d.length;
      continue;
    }
    // Terminal run followed by closers.
    std::size_t j = i;
    int marks = 0;
    bool only_period = true;
    while (j < s.size()) {
      auto e = text::decode(s, j);
      if (!is_terminal_mark(e.cp)) break;
      if (e.cp != U'.') only_period = false;
      ++marks;
      j += e.length;
    }
    const std::size_t marks_end = j;
    while (j < s.size()) {
      auto e = text::decode(s, j);
      if (!is_closer(e.cp)) break;
      j += e.length;
    }
    const bool at_gap = j == s.size() || text::is_whitespace(text::decode(s, j).cp);
    if (!at_gap) {
      i = j;
      continue;
    }
    bool blocked = false;
    if (marks == 1 && only_period && marks_end == j) {
      std::string_view token = s.substr(word_start, marks_end - word_start);
      while (!token.empty()) {
        auto e = text::decode(token, 0);
        if (!is_opener(e.cp)) break;
        token.remove_prefix(e.length);
      }
      blocked = abbreviations.contains(lang, token);
    }
    if (!blocked && marks_end == j && (only_period || (marks == 1 && s.substr(i, marks_end - i) == "…"))) {
      // Orthographic cues from the following word.
      const auto next = next_word(s, j);
      if (!next.empty()) {
        const char32_t first = text::decode(next, 0).cp;
        if (text::is_lower(first)) {
          blocked = true;  // "e.g. the", "Moment… war"
        } else if (marks == 1 && is_number(s.substr(word_start, i - word_start)) &&
                   abbreviations.contains(lang, next)) {
          blocked = true;  // ordinal before an abbreviation: "15. Dez.", "12. Jh."
        }
      }
    }
    if (!blocked) close(j);
    i = j;
  }
  close(s.size());
  return out;
}

std::vector<Chunk> chunk_sentences(std::string_view text, std::vector<Sentence> sentences,
                                   const TokenCounter& counter, std::uint64_t limit) {
  if (limit < 1) throw ConfigError("chunk limit must be >= 1");
  std::vector<Chunk> chunks;
  Chunk cur;
  auto flush = [&] {
    if (cur.sentences.empty()) return;
    cur.index = chunks.size();
    const auto b = cur.sentences.front().begin;
    cur.text = std::string(text.substr(b, cur.sentences.back().end - b));
    chunks.push_back(std::move(cur));
    cur = Chunk{};
  };
  for (auto& s : sentences) {
    const std::uint64_t n = counter.count(s.text);
    if (!cur.sentences.empty() && cur.token_count + n > limit) flush();
    cur.token_count += n;
    cur.sentences.push_back(std::move(s));
  }
  flush();
  return chunks;
}

std::vector<Chunk> chunk_document(const Document& doc, const TokenCounter& counter,
                                  const Abbreviations& abbreviations, std::uint64_t limit) {
  return chunk_sentences(doc.text, split_sentences(doc.text, doc.lang, abbreviations), counter, limit);
}

}  // namespace twp
