#include "twp/mixer.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "twp/error.hpp"
#include "twp/hash.hpp"
#include "twp/random.hpp"
#include "twp/tokenizer.hpp"

namespace twp {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::vector<std::size_t> sample_indices(std::span<const std::uint64_t> token_counts, std::uint64_t budget,
                                        std::uint64_t seed) {
  std::uint64_t total = 0;
  for (auto c : token_counts) total += c;
  if (total < budget) {
    throw DataError("corpus has " + std::to_string(total) + " tokens, budget is " + std::to_string(budget) +
                    " (shortfall " + std::to_string(budget - total) + ")");
  }
  std::vector<std::size_t> order(token_counts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> out;
  std::uint64_t acc = 0;
  for (std::size_t i : order) {
    if (acc >= budget) break;
    out.push_back(i);
    acc += token_counts[i];
  }
  return out;
}

namespace {

struct Scan {
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint64_t> tokens;
  SampleSummary summary;
};

Scan scan_corpus(const fs::path& corpus, const TokenCounter& counter) {
  CorpusReader reader(corpus, ReadMode::strict);
  const bool cache = reader.cache_valid_for(counter.fingerprint());
  Scan s;
  while (auto d = reader.next()) {
    const auto n = effective_token_count(*d, counter, cache);
    s.offsets.push_back(reader.last_offset());
    s.tokens.push_back(n);
    s.summary.available_tokens += n;
    s.summary.max_doc_tokens = std::max(s.summary.max_doc_tokens, n);
  }
  s.summary.available_documents = s.tokens.size();
  return s;
}

SampleSummary write_sample(const fs::path& corpus, const Scan& scan, std::uint64_t budget, const TokenCounter& counter,
                           std::uint64_t seed, const fs::path& output) {
  auto picked = sample_indices(scan.tokens, budget, seed);
  SampleSummary sum = scan.summary;
  std::ifstream in(corpus, std::ios::binary);
  CorpusWriter out(output, CorpusHeader{counter.fingerprint()});
  for (std::size_t i : picked) {
    Document d = read_document_at(in, scan.offsets[i]);
    d.token_count = scan.tokens[i];
    out.write(d);
    sum.tokens += scan.tokens[i];
  }
  out.flush();
  sum.documents = picked.size();
  return sum;
}

}  // namespace

SampleSummary measure_corpus(const fs::path& corpus, const TokenCounter& counter) {
  return scan_corpus(corpus, counter).summary;
}

SampleSummary balanced_sample(const fs::path& corpus, std::uint64_t budget, const TokenCounter& counter,
                              std::uint64_t seed, const fs::path& output) {
  auto scan = scan_corpus(corpus, counter);
  if (scan.summary.available_tokens < budget) {
    throw DataError(corpus.string() + ": " + std::to_string(scan.summary.available_tokens) +
                    " tokens available, budget " + std::to_string(budget) + " (shortfall " +
                    std::to_string(budget - scan.summary.available_tokens) + ")");
  }
  return write_sample(corpus, scan, budget, counter, seed, output);
}

void interleave(std::vector<DocumentSource> sources, std::vector<std::uint64_t> sizes, std::uint64_t seed,
                std::size_t buffer_size, const std::function<void(Document&&)>& sink) {
  if (sources.size() != sizes.size()) throw Error("interleave: sources and sizes differ in length");
  if (buffer_size == 0) buffer_size = 1;
  Rng rng(seed);
  std::uint64_t remaining = 0;
  for (auto s : sizes) remaining += s;
  std::vector<Document> buffer;
  buffer.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(buffer_size, remaining)));
  while (remaining > 0) {
    std::uint64_t r = rng.below(remaining);
    std::size_t src = 0;
    while (r >= sizes[src]) r -= sizes[src++];
    auto doc = sources[src]();
    if (!doc) throw DataError("interleave: source " + std::to_string(src) + " ended early");
    --sizes[src];
    --remaining;
    if (buffer.size() < buffer_size) {
      buffer.push_back(std::move(*doc));
    } else {
      const std::size_t j = rng.below(buffer.size());
      sink(std::move(buffer[j]));
      buffer[j] = std::move(*doc);
    }
  }
  rng.shuffle(std::span<Document>(buffer));
  for (auto& d : buffer) sink(std::move(d));
}

std::vector<Document> interleave_documents(std::vector<std::vector<Document>> corpora, std::uint64_t seed,
                                           std::size_t buffer_size) {
  std::vector<DocumentSource> sources;
  std::vector<std::uint64_t> sizes;
  for (auto& c : corpora) {
    sizes.push_back(c.size());
    sources.push_back([&c, i = std::size_t{0}]() mutable -> std::optional<Document> {
      if (i >= c.size()) return std::nullopt;
      return std::move(c[i++]);
    });
  }
  std::vector<Document> out;
  interleave(std::move(sources), std::move(sizes), seed, buffer_size, [&](Document&& d) { out.push_back(std::move(d)); });
  return out;
}

std::uint64_t interleave_files(const std::vector<fs::path>& inputs, std::uint64_t seed, std::size_t buffer_size,
                               const fs::path& output, std::optional<CorpusHeader> header) {
  std::vector<std::uint64_t> sizes;
  for (const auto& p : inputs) {
    CorpusReader r(p, ReadMode::strict);
    std::uint64_t n = 0;
    while (r.next()) ++n;
    sizes.push_back(n);
  }
  std::vector<std::unique_ptr<CorpusReader>> readers;
  std::vector<DocumentSource> sources;
  for (const auto& p : inputs) {
    readers.push_back(std::make_unique<CorpusReader>(p, ReadMode::strict));
    sources.push_back([r = readers.back().get()] { return r->next(); });
  }
  CorpusWriter out(output, std::move(header));
  interleave(std::move(sources), std::move(sizes), seed, buffer_size, [&](Document&& d) { out.write(d); });
  out.flush();
  return out.documents_written();
}

void MixtureSpec::validate() const {
  std::vector<std::string> d;
  const std::string p = "mix." + stage;
  if (entries.empty()) d.push_back(p + ": no sources");
  std::size_t with_budget = 0, with_weight = 0;
  std::set<std::string> names;
  double wsum = 0.0;
  for (const auto& e : entries) {
    if (!names.insert(e.name).second) d.push_back(p + ".source." + e.name + ": duplicate source name");
    if (e.budget && e.weight) d.push_back(p + ".source." + e.name + ": set budget or weight, not both");
    if (e.budget) ++with_budget;
    if (e.weight) {
      ++with_weight;
      if (!(*e.weight >= 0.0)) d.push_back(p + ".weight." + e.name + ": must be >= 0");
      wsum += *e.weight;
    }
    if (!e.budget && !e.weight) d.push_back(p + ".source." + e.name + ": needs a budget or a weight");
  }
  if (with_budget && with_weight) d.push_back(p + ": entries mix budgets and weights; use one kind for all");
  if (with_weight && with_weight == entries.size()) {
    if (std::fabs(wsum - 1.0) > 1e-9) d.push_back(p + ": weights sum to " + std::to_string(wsum) + ", expected 1");
    if (!total_tokens) d.push_back(p + ".total_tokens: required when weights are used");
  }
  if (!d.empty()) throw ConfigError(std::move(d));
}

std::vector<std::uint64_t> MixtureSpec::resolved_budgets() const {
  std::vector<std::uint64_t> out;
  for (const auto& e : entries) {
    if (e.budget) out.push_back(*e.budget);
    else out.push_back(static_cast<std::uint64_t>(std::llround(*e.weight * static_cast<double>(*total_tokens))));
  }
  return out;
}

StageResult compose_stage(const MixtureSpec& spec, const TokenCounter& counter, const fs::path& out_dir) {
  spec.validate();
  const auto budgets = spec.resolved_budgets();
  std::vector<Scan> scans;
  std::vector<std::string> shortfalls;
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    scans.push_back(scan_corpus(spec.entries[i].corpus, counter));
    const auto avail = scans.back().summary.available_tokens;
    if (avail < budgets[i]) {
      shortfalls.push_back("mix." + spec.stage + ": source '" + spec.entries[i].name + "' has " +
                           std::to_string(avail) + " tokens, budget " + std::to_string(budgets[i]) + " (shortfall " +
                           std::to_string(budgets[i] - avail) + ")");
    }
  }
  if (!shortfalls.empty()) {
    std::string msg;
    for (const auto& s : shortfalls) msg += (msg.empty() ? "" : "\n") + s;
    throw DataError(msg);
  }

  fs::create_directories(out_dir / "samples");
  ordered_json m;
  m["stage"] = spec.stage;
  m["seed"] = spec.seed;
  m["tokenizer_fingerprint"] = counter.fingerprint();
  m["shuffle_buffer"] = spec.shuffle_buffer;
  if (spec.total_tokens) m["total_tokens"] = *spec.total_tokens;
  m["sources"] = ordered_json::array();
  std::vector<fs::path> samples;
  StageResult res;
  std::vector<SampleSummary> sums;
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    const auto& e = spec.entries[i];
    const auto sub = derive_seed(spec.seed, spec.stage + "/sample/" + e.name);
    const auto path = out_dir / "samples" / (e.name + ".jsonl");
    sums.push_back(write_sample(e.corpus, scans[i], budgets[i], counter, sub, path));
    samples.push_back(path);
    res.tokens += sums.back().tokens;
    res.documents += sums.back().documents;
    ordered_json s;
    s["name"] = e.name;
    s["corpus"] = e.corpus.string();
    if (e.weight) s["weight"] = *e.weight;
    s["budget"] = budgets[i];
    s["seed"] = sub;
    s["available_tokens"] = sums.back().available_tokens;
    s["available_documents"] = sums.back().available_documents;
    s["realized_tokens"] = sums.back().tokens;
    s["realized_documents"] = sums.back().documents;
    s["max_doc_tokens"] = sums.back().max_doc_tokens;
    m["sources"].push_back(s);
  }
  for (auto& s : m["sources"]) {
    s["realized_fraction"] =
        res.tokens ? static_cast<double>(s["realized_tokens"].get<std::uint64_t>()) / static_cast<double>(res.tokens) : 0.0;
  }
  const auto iseed = derive_seed(spec.seed, spec.stage + "/interleave");
  m["interleave_seed"] = iseed;
  interleave_files(samples, iseed, spec.shuffle_buffer, out_dir / "mixed.jsonl", CorpusHeader{counter.fingerprint()});
  m["realized_tokens"] = res.tokens;
  m["realized_documents"] = res.documents;
  res.manifest = m;
  return res;
}

}  // namespace twp
