#include "twp/pack.hpp"

#include <algorithm>
#include <cstring>
#include <future>
#include <thread>

#include "twp/error.hpp"
#include "twp/parallel.hpp"
#include "twp/tokenizer.hpp"

namespace twp {

namespace fs = std::filesystem;

namespace {

void put_u32(char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}
void put_u64(char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}
std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}
std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

void header_bytes(char* h, std::uint32_t L, std::uint64_t count) {
  std::memset(h, 0, kPackHeaderSize);
  std::memcpy(h, "TWPK", 4);
  put_u32(h + 4, kPackVersion);
  put_u32(h + 8, L);
  put_u32(h + 12, kPackDtypeU32);
  put_u64(h + 16, count);
}

}  // namespace

bool PackManifest::identity_holds() const {
  return total_doc_tokens + eos_count == sequence_count * sequence_length + dropped_remainder &&
         dropped_remainder < sequence_length;
}

nlohmann::ordered_json PackManifest::to_json() const {
  nlohmann::ordered_json j;
  j["sequence_length"] = sequence_length;
  j["sequence_count"] = sequence_count;
  j["documents"] = documents;
  j["total_doc_tokens"] = total_doc_tokens;
  j["eos_count"] = eos_count;
  j["dropped_remainder"] = dropped_remainder;
  j["skipped_empty_documents"] = skipped_empty_documents;
  j["eos_id"] = eos_id;
  j["tokenizer_fingerprint"] = tokenizer_fingerprint;
  j["identity_holds"] = identity_holds();
  return j;
}

PackWriter::PackWriter(const fs::path& path, std::uint32_t L, std::uint32_t eos_id, std::string fingerprint)
    : path_(path) {
  if (L < 2) throw ConfigError("pack.sequence_length must be >= 2");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  char h[kPackHeaderSize];
  header_bytes(h, L, 0);
  out_.write(h, kPackHeaderSize);
  m_.sequence_length = L;
  m_.eos_id = eos_id;
  m_.tokenizer_fingerprint = std::move(fingerprint);
  current_.reserve(L);
}

void PackWriter::push(std::uint32_t id) {
  current_.push_back(id);
  if (current_.size() == m_.sequence_length) {
    std::vector<char> buf(current_.size() * 4);
    for (std::size_t i = 0; i < current_.size(); ++i) put_u32(buf.data() + 4 * i, current_[i]);
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out_) throw IoError("write failed on " + path_.string());
    ++m_.sequence_count;
    current_.clear();
  }
}

void PackWriter::add(std::span<const std::uint32_t> ids) {
  if (ids.empty()) {
    ++m_.skipped_empty_documents;
    return;
  }
  for (auto id : ids) push(id);
  push(m_.eos_id);
  ++m_.documents;
  m_.total_doc_tokens += ids.size();
  ++m_.eos_count;
}

PackManifest PackWriter::finish() {
  if (finished_) return m_;
  finished_ = true;
  m_.dropped_remainder = current_.size();
  current_.clear();
  char h[kPackHeaderSize];
  header_bytes(h, m_.sequence_length, m_.sequence_count);
  out_.seekp(0);
  out_.write(h, kPackHeaderSize);
  out_.close();
  if (!out_) throw IoError("finalizing " + path_.string() + " failed");
  if (!m_.identity_holds()) {
    throw DataError("pack conservation identity violated: " + std::to_string(m_.total_doc_tokens) + " + " +
                    std::to_string(m_.eos_count) + " != " + std::to_string(m_.sequence_count) + " x " +
                    std::to_string(m_.sequence_length) + " + " + std::to_string(m_.dropped_remainder));
  }
  return m_;
}

PackManifest pack_stream(const DocumentSource& docs, const TokenCounter& counter, std::uint32_t L,
                         const fs::path& output) {
  PackWriter w(output, L, counter.eos_id(), counter.fingerprint());
  // Tokenize a batch in parallel, write it in order.
  constexpr std::size_t kBatch = 512;
  const std::size_t workers = worker_count();
  std::vector<Document> batch;
  auto drain = [&] {
    std::vector<std::vector<std::uint32_t>> ids(batch.size());
    std::vector<std::future<void>> tasks;
    const std::size_t per = (batch.size() + workers - 1) / workers;
    for (std::size_t t = 0; t * per < batch.size(); ++t) {
      tasks.push_back(std::async(std::launch::async, [&, t] {
        for (std::size_t i = t * per; i < std::min(batch.size(), (t + 1) * per); ++i) ids[i] = counter.encode(batch[i].text);
      }));
    }
    for (auto& f : tasks) f.get();
    for (const auto& v : ids) w.add(v);
    batch.clear();
  };
  while (auto d = docs()) {
    batch.push_back(std::move(*d));
    if (batch.size() == kBatch) drain();
  }
  drain();
  return w.finish();
}

PackManifest pack_documents(std::span<const Document> docs, const TokenCounter& counter, std::uint32_t L,
                            const fs::path& output) {
  std::size_t i = 0;
  return pack_stream([&]() -> std::optional<Document> {
    if (i >= docs.size()) return std::nullopt;
    return docs[i++];
  }, counter, L, output);
}

PackManifest pack_corpus(const fs::path& corpus, const TokenCounter& counter, std::uint32_t L, const fs::path& output) {
  CorpusReader r(corpus, ReadMode::strict);
  return pack_stream([&] { return r.next(); }, counter, L, output);
}

PackHeader read_pack_header(const fs::path& path, std::optional<std::uint32_t> expected_length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char h[kPackHeaderSize];
  in.read(h, kPackHeaderSize);
  if (in.gcount() != static_cast<std::streamsize>(kPackHeaderSize)) {
    throw DataError(path.string() + ": truncated header (" + std::to_string(in.gcount()) + " of 32 bytes)");
  }
  if (std::memcmp(h, "TWPK", 4) != 0) throw DataError(path.string() + ": bad magic, not a packed token file");
  PackHeader ph;
  ph.version = get_u32(h + 4);
  ph.sequence_length = get_u32(h + 8);
  ph.dtype = get_u32(h + 12);
  ph.sequence_count = get_u64(h + 16);
  if (ph.version != kPackVersion) {
    throw DataError(path.string() + ": unsupported version " + std::to_string(ph.version));
  }
  if (ph.dtype != kPackDtypeU32) throw DataError(path.string() + ": unsupported dtype " + std::to_string(ph.dtype));
  if (expected_length && *expected_length != ph.sequence_length) {
    throw DataError(path.string() + ": sequence length " + std::to_string(ph.sequence_length) + ", expected " +
                    std::to_string(*expected_length));
  }
  const std::uint64_t want = kPackHeaderSize + ph.sequence_count * ph.sequence_length * 4ULL;
  const std::uint64_t have = fs::file_size(path);
  if (have < want) {
    throw DataError(path.string() + ": truncated, " + std::to_string(have) + " bytes but header promises " +
                    std::to_string(want));
  }
  if (have > want) throw DataError(path.string() + ": " + std::to_string(have - want) + " trailing bytes after data");
  return ph;
}

std::vector<std::vector<std::uint32_t>> unpack_inspect(const fs::path& path, std::size_t n,
                                                       std::optional<std::uint32_t> expected_length) {
  const auto ph = read_pack_header(path, expected_length);
  std::ifstream in(path, std::ios::binary);
  in.seekg(kPackHeaderSize);
  const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(n, ph.sequence_count));
  std::vector<std::vector<std::uint32_t>> out(count);
  std::vector<char> buf(ph.sequence_length * 4ULL);
  for (auto& seq : out) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw DataError(path.string() + ": truncated data");
    seq.resize(ph.sequence_length);
    for (std::size_t i = 0; i < seq.size(); ++i) seq[i] = get_u32(buf.data() + 4 * i);
  }
  return out;
}

}  // namespace twp
