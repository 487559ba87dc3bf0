#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace twp {

// Token counting and encoding. Two modes:
//   whitespace  every maximal non-whitespace run is one token; ids are a hash
//               of the run folded into [3, vocab_size)
//   bpe         rank-ordered merges over code points of "▁"-prefixed words,
//               with <0xXX> byte fallback for symbols missing from the vocab
// Both are deterministic and never emit the EOS id for ordinary text.
class TokenCounter {
 public:
  enum class Mode { whitespace, bpe };

  static TokenCounter whitespace(std::uint32_t vocab_size = 32000, std::uint32_t eos_id = 2);
  static TokenCounter bpe(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt);

  std::vector<std::uint32_t> encode(std::string_view text) const;
  std::uint64_t count(std::string_view text) const;

  Mode mode() const;
  std::uint32_t eos_id() const;
  std::uint32_t vocab_size() const;
  // Identifies the tokenizer; stored alongside cached counts and manifests.
  const std::string& fingerprint() const;

  // BPE only: the symbol strings of a single pre-tokenized word, before id
  // lookup. Exposed for tests.
  std::vector<std::string> bpe_word(std::string_view word) const;

 private:
  struct Impl;
  explicit TokenCounter(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

}  // namespace twp
