#pragma once

// Minimal UTF-8 and character-class helpers. Letter and case tables cover the
// Latin, Greek and Cyrillic blocks exhaustively and the major other scripts by
// range; that is enough for the four target languages and for rejecting
// non-alphabetic noise.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace twp::text {

inline constexpr char32_t kReplacement = 0xFFFD;

struct Decoded {
  char32_t cp;
  std::size_t length;  // bytes consumed, >= 1
};

// Decodes the code point starting at `pos`. Invalid sequences yield U+FFFD
// with length 1.
Decoded decode(std::string_view s, std::size_t pos);

void append_utf8(std::string& out, char32_t cp);

bool valid_utf8(std::string_view s);

bool is_whitespace(char32_t cp);
bool is_letter(char32_t cp);
bool is_digit(char32_t cp);
bool is_lower(char32_t cp);
char32_t to_lower(char32_t cp);

std::string lowercase(std::string_view s);

// Number of code points.
std::size_t length(std::string_view s);

std::string_view trim(std::string_view s);

// Iterates over maximal runs of non-whitespace, calling f(string_view).
template <class F>
void for_each_word(std::string_view s, F&& f) {
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < s.size()) {
    auto d = decode(s, i);
    if (is_whitespace(d.cp)) {
      if (start != std::string_view::npos) {
        f(s.substr(start, i - start));
        start = std::string_view::npos;
      }
    } else if (start == std::string_view::npos) {
      start = i;
    }
    i += d.length;
  }
  if (start != std::string_view::npos) f(s.substr(start));
}

}  // namespace twp::text
