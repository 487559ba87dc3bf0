#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twp/corpus.hpp"

namespace twp {

struct DedupParams {
  std::uint64_t seed = 0x5eed;
  double threshold = 0.8;
  std::size_t num_perm = 128;
  std::size_t bands = 16;
  std::size_t rows = 8;
  std::size_t shingle_n = 5;
  bool exact = false;  // verify candidates with exact shingle Jaccard

  void validate() const;  // throws ConfigError
  nlohmann::ordered_json to_json() const;
};

// Lowercase, drop everything that is not a letter, digit or whitespace,
// collapse whitespace runs to one space, trim.
std::string normalize_for_dedup(std::string_view text);

// Sorted, unique 64-bit hashes of word n-grams of the normalized text. Fewer
// than n words gives the single shingle of the whole normalized text; an
// empty normalized text gives no shingles.
std::vector<std::uint64_t> shingle_set(std::string_view text, std::size_t n = 5);

double exact_jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

struct MinHashSignature {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> values;
  bool operator==(const MinHashSignature&) const = default;
};

// Permutation k is h_k(x) = fmix64(x ^ s_k) with s_k drawn from splitmix64
// seeded by the global seed.
class MinHasher {
 public:
  MinHasher(std::uint64_t seed, std::size_t num_perm = 128);

  // Throws DataError on an empty shingle set.
  MinHashSignature signature(std::span<const std::uint64_t> shingles) const;
  MinHashSignature signature_of_text(std::string_view text, std::size_t shingle_n = 5) const;

  std::uint64_t seed() const { return seed_; }
  std::size_t num_perm() const { return salts_.size(); }

 private:
  std::uint64_t seed_;
  std::vector<std::uint64_t> salts_;
};

// Fraction of agreeing positions. Throws DataError on seed or length mismatch.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

// Banded LSH index: two signatures are candidates iff all rows of at least
// one band are identical.
class LshIndex {
 public:
  LshIndex(std::size_t bands, std::size_t rows);
  void insert(std::size_t item, const MinHashSignature& sig);
  // Unique (i, j) pairs with i < j, sorted.
  std::vector<std::pair<std::size_t, std::size_t>> candidate_pairs() const;

 private:
  std::size_t bands_;
  std::size_t rows_;
  std::vector<const MinHashSignature*> sigs_;
  std::vector<std::size_t> items_;
};

struct DedupCluster {
  Lang lang = Lang::other;
  std::string kept;
  std::vector<std::string> removed;
  std::vector<std::tuple<std::string, std::string, double>> estimates;  // confirmed pairs
};

struct DedupResult {
  std::vector<bool> keep;  // parallel to the input documents
  std::vector<DedupCluster> clusters;
  std::uint64_t candidate_pairs = 0;
  std::uint64_t confirmed_pairs = 0;
  std::uint64_t empty_normalized = 0;  // kept untouched; cannot be signed
};

// In-memory dedup, independently per language. Throws DataError on duplicate ids.
DedupResult dedup_documents(std::span<const Document> docs, const DedupParams& params);

struct DedupSummary {
  std::uint64_t input = 0;
  std::uint64_t kept = 0;
  std::uint64_t removed = 0;
  std::uint64_t clusters = 0;
  std::uint64_t candidate_pairs = 0;
  std::uint64_t confirmed_pairs = 0;
  std::uint64_t empty_normalized = 0;
  nlohmann::ordered_json to_json() const;
};

// Writes kept.jsonl (input order) and clusters.jsonl (header line with the
// parameters, then one cluster per line) in out_dir.
DedupSummary dedup_corpus(const std::filesystem::path& input, const DedupParams& params,
                          const std::filesystem::path& out_dir);

}  // namespace twp
