#pragma once
// Document pairs with a planted word-shingle Jaccard: with shingle size 1 and
// distinct words, two docs sharing s of N words each have J = s / (2N - s).

#include <string>
#include <utility>

#include "twp/random.hpp"

namespace twp::test {

// Distinct lowercase token for every index; letters only so normalization
// leaves it alone.
inline std::string token(std::uint64_t i, const std::string& tag) {
  std::string s = tag;
  do {
    s += static_cast<char>('a' + i % 26);
    i /= 26;
  } while (i);
  return s;
}

// Union of 200 words, 200*J shared, 100 + 100*J words per document.
inline std::pair<std::string, std::string> planted_pair(double j, const std::string& tag) {
  const auto shared = static_cast<std::uint64_t>(200 * j + 0.5);
  const auto own = (200 - shared) / 2;
  std::string a, b;
  auto add = [](std::string& d, const std::string& w) { d += (d.empty() ? "" : " ") + w; };
  for (std::uint64_t i = 0; i < shared; ++i) {
    add(a, token(i, tag + "s"));
    add(b, token(i, tag + "s"));
  }
  for (std::uint64_t i = 0; i < own; ++i) {
    add(a, token(i, tag + "a"));
    add(b, token(i, tag + "b"));
  }
  return {a, b};
}

}  // namespace twp::test
