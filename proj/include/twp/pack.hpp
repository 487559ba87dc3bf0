#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "twp/corpus.hpp"
#include "twp/mixer.hpp"

namespace twp {

class TokenCounter;

// File layout, little-endian:
//   0  char[4] "TWPK"
//   4  u32     version (1)
//   8  u32     sequence length L
//  12  u32     dtype (1 = u32 token ids)
//  16  u64     sequence count
//  24  u64     reserved (0)
//  32  u32[count * L]
inline constexpr std::uint32_t kPackVersion = 1;
inline constexpr std::uint32_t kPackDtypeU32 = 1;
inline constexpr std::size_t kPackHeaderSize = 32;

struct PackManifest {
  std::uint32_t sequence_length = 2048;
  std::uint64_t sequence_count = 0;
  std::uint64_t documents = 0;
  std::uint64_t total_doc_tokens = 0;
  std::uint64_t eos_count = 0;
  std::uint64_t dropped_remainder = 0;
  std::uint64_t skipped_empty_documents = 0;
  std::uint32_t eos_id = 0;
  std::string tokenizer_fingerprint;

  // total_doc_tokens + eos_count == sequence_count * L + dropped_remainder,
  // with dropped_remainder < L.
  bool identity_holds() const;
  nlohmann::ordered_json to_json() const;
};

// Streams documents into fixed-length sequences: doc tokens, then EOS, chopped
// every L ids. The trailing partial sequence is dropped on finish().
class PackWriter {
 public:
  PackWriter(const std::filesystem::path& path, std::uint32_t sequence_length, std::uint32_t eos_id,
             std::string tokenizer_fingerprint);

  void add(std::span<const std::uint32_t> doc_tokens);
  // Throws DataError if the conservation identity fails.
  PackManifest finish();

 private:
  void push(std::uint32_t id);

  std::filesystem::path path_;
  std::ofstream out_;
  std::vector<std::uint32_t> current_;
  PackManifest m_;
  bool finished_ = false;
};

PackManifest pack_stream(const DocumentSource& docs, const TokenCounter& counter, std::uint32_t sequence_length,
                         const std::filesystem::path& output);
PackManifest pack_documents(std::span<const Document> docs, const TokenCounter& counter,
                            std::uint32_t sequence_length, const std::filesystem::path& output);
PackManifest pack_corpus(const std::filesystem::path& corpus, const TokenCounter& counter,
                         std::uint32_t sequence_length, const std::filesystem::path& output);

struct PackHeader {
  std::uint32_t version = 0;
  std::uint32_t sequence_length = 0;
  std::uint32_t dtype = 0;
  std::uint64_t sequence_count = 0;
};

// Validates magic, version, dtype, expected L and file size.
PackHeader read_pack_header(const std::filesystem::path& path, std::optional<std::uint32_t> expected_length = std::nullopt);

std::vector<std::vector<std::uint32_t>> unpack_inspect(const std::filesystem::path& path, std::size_t n,
                                                       std::optional<std::uint32_t> expected_length = std::nullopt);

}  // namespace twp
