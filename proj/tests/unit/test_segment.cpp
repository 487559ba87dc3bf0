#include <catch_amalgamated.hpp>

#include <fstream>
#include <set>

#include "../support/synth.hpp"
#include "twp/error.hpp"
#include "twp/segment.hpp"
#include "twp/tokenizer.hpp"

using namespace twp;
namespace fs = std::filesystem;

namespace {

const Abbreviations& abbr() {
  static const Abbreviations a = Abbreviations::load_dir(fs::path(TWP_DATA_DIR) / "abbreviations");
  return a;
}

// Every byte is inside a sentence span or is whitespace between spans.
void check_partition(std::string_view text, const std::vector<Sentence>& ss) {
  std::size_t pos = 0;
  for (const auto& s : ss) {
    REQUIRE(s.begin >= pos);
    for (std::size_t i = pos; i < s.begin; ++i) CHECK(std::isspace(static_cast<unsigned char>(text[i])));
    CHECK(text.substr(s.begin, s.end - s.begin) == s.text);
    pos = s.end;
  }
  for (std::size_t i = pos; i < text.size(); ++i) CHECK(std::isspace(static_cast<unsigned char>(text[i])));
}

// Brute-force greedy: each chunk takes the longest run of sentences, starting
// at the first unassigned one, whose summed count fits (at least one).
std::vector<std::vector<std::size_t>> greedy_oracle(const std::vector<std::uint64_t>& counts, std::uint64_t limit) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t i = 0;
  while (i < counts.size()) {
    std::size_t best = i + 1;
    for (std::size_t j = i + 1; j <= counts.size(); ++j) {
      std::uint64_t sum = 0;
      for (std::size_t k = i; k < j; ++k) sum += counts[k];
      if (sum <= limit) best = j;
      else break;
    }
    std::vector<std::size_t> c;
    for (std::size_t k = i; k < best; ++k) c.push_back(k);
    out.push_back(c);
    i = best;
  }
  return out;
}

}  // namespace

TEST_CASE("split: terminal punctuation", "[segment]") {
  auto ss = split_sentences("A. B! C?", Lang::en, abbr());
  REQUIRE(ss.size() == 3);
  for (const auto& s : ss) CHECK(s.terminal);
  CHECK(ss[0].text == "A.");
  CHECK(ss[2].text == "C?");
}

TEST_CASE("split: abbreviations do not end sentences", "[segment]") {
  auto ss = split_sentences("Dr. Smith arrived. He left.", Lang::en, abbr());
  REQUIRE(ss.size() == 2);
  CHECK(ss[0].text == "Dr. Smith arrived.");
  Abbreviations none;
  CHECK(split_sentences("Dr. Smith arrived. He left.", Lang::en, none).size() == 3);
}

TEST_CASE("split: unfinished text is one non-terminal sentence", "[segment]") {
  auto ss = split_sentences("an unfinished thought", Lang::en, abbr());
  REQUIRE(ss.size() == 1);
  CHECK_FALSE(ss[0].terminal);
  CHECK(split_sentences("", Lang::en, abbr()).empty());
  CHECK(split_sentences(" \n\n ", Lang::en, abbr()).empty());
}

TEST_CASE("split: closers, ellipsis, decimals, blank lines", "[segment]") {
  auto ss = split_sentences("He said \"stop.\" Then (quietly) he left.) Price: 3.5 euros… Done", Lang::en, abbr());
  REQUIRE(ss.size() == 4);
  CHECK(ss[0].text == "He said \"stop.\"");
  CHECK(ss[0].terminal);
  CHECK(ss[1].text == "Then (quietly) he left.)");
  CHECK(ss[2].text == "Price: 3.5 euros…");
  CHECK_FALSE(ss[3].terminal);

  auto p = split_sentences("A heading\n\nBody text here. More", Lang::en, abbr());
  REQUIRE(p.size() == 3);
  CHECK(p[0].text == "A heading");
  CHECK_FALSE(p[0].terminal);
  CHECK(split_sentences("one line\nnext line", Lang::en, abbr()).size() == 1);
}

TEST_CASE("ends_terminal", "[segment]") {
  CHECK(ends_terminal("Fertig!"));
  CHECK(ends_terminal("«Fin.»"));
  CHECK(ends_terminal("Really?\")"));
  CHECK(ends_terminal("Hmm…"));
  CHECK_FALSE(ends_terminal("Le ciel est"));
  CHECK_FALSE(ends_terminal(""));
  CHECK_FALSE(ends_terminal("3:"));
}

TEST_CASE("split: hand-segmented fixtures, >= 95% boundary agreement", "[segment]") {
  for (Lang l : kTargetLanguages) {
    const auto path = fs::path(TWP_FIXTURES) / "segmentation" / (std::string(to_string(l)) + ".txt");
    std::ifstream in(path);
    REQUIRE(in);
    std::string text;
    std::set<std::size_t> gold;
    std::size_t sentences = 0;
    std::string line;
    bool para = false;
    while (std::getline(in, line)) {
      if (line.empty() || line.starts_with("#")) continue;
      if (line == "¶") {
        para = true;
        continue;
      }
      if (!text.empty()) text += para ? "\n\n" : " ";
      para = false;
      text += line;
      gold.insert(text.size());
      ++sentences;
    }
    REQUIRE(sentences == 50);
    auto ss = split_sentences(text, l, abbr());
    check_partition(text, ss);
    std::set<std::size_t> pred;
    for (const auto& s : ss) pred.insert(s.end);
    std::size_t both = 0;
    for (auto b : pred) both += gold.contains(b);
    const double agreement = static_cast<double>(both) / static_cast<double>(gold.size() + pred.size() - both);
    INFO(to_string(l) << " agreement " << agreement << " (" << pred.size() << " predicted, " << gold.size() << " gold)");
    for (auto b : pred) {
      if (!gold.contains(b)) UNSCOPED_INFO("spurious boundary after: ..." << text.substr(b > 30 ? b - 30 : 0, std::min<std::size_t>(b, 30)));
    }
    CHECK(agreement >= 0.95);
  }
}

TEST_CASE("split: partition property on random text", "[segment]") {
  Rng rng(11);
  const char* pieces[] = {"word", "Dr.", "etc.", "3.5", "?", "!", ".", "…", "\"", "»", ")", " ", "  ", "\n", "\n\n", "é", "z.B."};
  for (int t = 0; t < 500; ++t) {
    std::string s;
    const auto n = rng.below(40);
    for (std::uint64_t i = 0; i < n; ++i) s += pieces[rng.below(std::size(pieces))];
    const Lang l = kTargetLanguages[rng.below(4)];
    auto ss = split_sentences(s, l, abbr());
    check_partition(s, ss);
    for (const auto& x : ss) {
      CHECK_FALSE(x.text.empty());
      CHECK(x.terminal == ends_terminal(x.text));
    }
  }
}

TEST_CASE("chunk: 4 x 100 tokens at limit 300 gives [3, 1]", "[segment]") {
  auto ws = TokenCounter::whitespace();
  std::string sent = "W ";
  for (int i = 0; i < 98; ++i) sent += "w ";
  sent += "end.";
  std::string text = sent + " " + sent + " " + sent + " " + sent;
  Document d{"d", Lang::en, text, std::nullopt, std::nullopt};
  auto cs = chunk_document(d, ws, abbr(), 300);
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].sentences.size() == 3);
  CHECK(cs[0].token_count == 300);
  CHECK(cs[1].sentences.size() == 1);
  CHECK(cs[0].index == 0);
  CHECK(cs[1].index == 1);
  CHECK(cs[0].text == sent + " " + sent + " " + sent);
}

TEST_CASE("chunk: oversized sentence forms its own chunk", "[segment]") {
  auto ws = TokenCounter::whitespace();
  std::string big = "W ";
  for (int i = 0; i < 499; ++i) big += "w ";
  big += "end.";
  Document d{"d", Lang::en, "Short one. " + big + " Tail.", std::nullopt, std::nullopt};
  auto cs = chunk_document(d, ws, abbr(), 300);
  REQUIRE(cs.size() == 3);
  CHECK(cs[1].sentences.size() == 1);
  CHECK(cs[1].token_count == 501);
  CHECK(chunk_document({"e", Lang::en, "", {}, {}}, ws, abbr(), 300).empty());
  CHECK_THROWS_AS(chunk_document(d, ws, abbr(), 0), ConfigError);
}

TEST_CASE("chunk: random documents match the brute-force greedy oracle", "[segment]") {
  auto ws = TokenCounter::whitespace();
  Rng rng(2024);
  for (int t = 0; t < 300; ++t) {
    const Lang l = kTargetLanguages[rng.below(4)];
    Document d{"d", l, test::document_text(rng, l, 1 + rng.below(60)), std::nullopt, std::nullopt};
    const std::uint64_t limit = 1 + rng.below(120);
    auto ss = split_sentences(d.text, l, abbr());
    std::vector<std::uint64_t> counts;
    for (const auto& s : ss) counts.push_back(ws.count(s.text));
    auto expect = greedy_oracle(counts, limit);
    auto cs = chunk_document(d, ws, abbr(), limit);
    REQUIRE(cs.size() == expect.size());
    std::size_t k = 0;
    for (std::size_t c = 0; c < cs.size(); ++c) {
      REQUIRE(cs[c].sentences.size() == expect[c].size());
      CHECK(cs[c].index == c);
      for (const auto& s : cs[c].sentences) CHECK(s == ss[k++]);
      if (cs[c].sentences.size() >= 2) CHECK(cs[c].token_count <= limit);
    }
    CHECK(k == ss.size());
    // monotone in the limit
    CHECK(chunk_document(d, ws, abbr(), limit + 1 + rng.below(50)).size() <= cs.size());
  }
}
