#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "twp/corpus.hpp"

namespace twp {

class TokenCounter;

// Shuffles all indices, then takes documents in that order until the running
// token total reaches the budget (the overshooting document is included).
// Throws DataError when the total is below the budget.
std::vector<std::size_t> sample_indices(std::span<const std::uint64_t> token_counts, std::uint64_t budget,
                                        std::uint64_t seed);

struct SampleSummary {
  std::uint64_t documents = 0;
  std::uint64_t tokens = 0;
  std::uint64_t available_documents = 0;
  std::uint64_t available_tokens = 0;
  std::uint64_t max_doc_tokens = 0;
};

// Token totals of a corpus (one streaming pass).
SampleSummary measure_corpus(const std::filesystem::path& corpus, const TokenCounter& counter);

// Writes the sample, in sampled order, with cached token counts.
SampleSummary balanced_sample(const std::filesystem::path& corpus, std::uint64_t budget, const TokenCounter& counter,
                              std::uint64_t seed, const std::filesystem::path& output);

using DocumentSource = std::function<std::optional<Document>()>;

// Merges sources by drawing each next document from a source chosen with
// probability proportional to its remaining count, through a reservoir
// shuffle buffer. When the buffer holds the whole union the result is a
// uniform shuffle of pre-shuffled sources.
void interleave(std::vector<DocumentSource> sources, std::vector<std::uint64_t> sizes, std::uint64_t seed,
                std::size_t buffer_size, const std::function<void(Document&&)>& sink);

std::vector<Document> interleave_documents(std::vector<std::vector<Document>> corpora, std::uint64_t seed,
                                           std::size_t buffer_size = 100000);

std::uint64_t interleave_files(const std::vector<std::filesystem::path>& inputs, std::uint64_t seed,
                               std::size_t buffer_size, const std::filesystem::path& output,
                               std::optional<CorpusHeader> header = std::nullopt);

struct MixtureEntry {
  std::string name;
  std::filesystem::path corpus;
  std::optional<std::uint64_t> budget;
  std::optional<double> weight;
};

struct MixtureSpec {
  std::string stage = "pretrain";
  std::vector<MixtureEntry> entries;
  std::optional<std::uint64_t> total_tokens;  // required with weights
  std::uint64_t seed = 0;
  std::size_t shuffle_buffer = 100000;

  // Budgets xor weights uniformly; weights sum to 1 within 1e-9.
  void validate() const;
  std::vector<std::uint64_t> resolved_budgets() const;
};

struct StageResult {
  nlohmann::ordered_json manifest;
  std::uint64_t documents = 0;
  std::uint64_t tokens = 0;
};

// Samples every source (after checking all of them for shortfall), then
// interleaves into <out_dir>/mixed.jsonl. Per-source samples are kept under
// <out_dir>/samples/.
StageResult compose_stage(const MixtureSpec& spec, const TokenCounter& counter, const std::filesystem::path& out_dir);

}  // namespace twp
