#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "twp/corpus.hpp"

namespace twp {

class TokenCounter;

struct Sentence {
  std::string text;
  std::size_t begin = 0;  // byte span [begin, end) in the parent text
  std::size_t end = 0;
  bool terminal = false;

  bool operator==(const Sentence&) const = default;
};

// Per-language abbreviation lists. Entries include the trailing period ("Dr.").
class Abbreviations {
 public:
  Abbreviations() = default;

  void add(Lang lang, std::string abbreviation);
  void load(Lang lang, const std::filesystem::path& file);
  // Loads <dir>/<lang>.txt for each target language that has a file.
  static Abbreviations load_dir(const std::filesystem::path& dir);

  // `token` is the whitespace-delimited word ending in '.', with leading
  // opening punctuation already stripped.
  bool contains(Lang lang, std::string_view token) const;
  std::size_t size(Lang lang) const;

 private:
  std::map<Lang, std::set<std::string, std::less<>>> lists_;
};

// True iff `s` ends with one of . ! ? … optionally followed by closing quote
// or bracket characters.
bool ends_terminal(std::string_view s);

// Rule-based segmentation:
//  - a run of terminal marks plus trailing closers ends a sentence when it is
//    followed by whitespace or end of text;
//  - a lone '.' closing a listed abbreviation does not;
//  - a blank line always ends a sentence.
// Sentences are whitespace-trimmed; text outside spans is whitespace only.
std::vector<Sentence> split_sentences(std::string_view text, Lang lang, const Abbreviations& abbreviations);

struct Chunk {
  std::vector<Sentence> sentences;
  std::uint64_t token_count = 0;
  std::size_t index = 0;
  std::string text;  // parent-text substring from first sentence begin to last sentence end
};

// Greedy chunking: append sentences while the running sum of sentence token
// counts stays <= limit. An oversized sentence forms its own chunk.
std::vector<Chunk> chunk_sentences(std::string_view text, std::vector<Sentence> sentences,
                                   const TokenCounter& counter, std::uint64_t limit);

std::vector<Chunk> chunk_document(const Document& doc, const TokenCounter& counter,
                                  const Abbreviations& abbreviations, std::uint64_t limit = 300);

}  // namespace twp
