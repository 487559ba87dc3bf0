#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "../support/synth.hpp"
#include "twp/error.hpp"
#include "twp/pack.hpp"
#include "twp/parallel.hpp"
#include "twp/tokenizer.hpp"

using namespace twp;
namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kEos = 2;

std::vector<std::uint32_t> ids(std::size_t n, std::uint32_t base) {
  std::vector<std::uint32_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = base + static_cast<std::uint32_t>(i % 1000) + 10;
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("two 1023-token documents fill exactly one 2048 sequence", "[pack]") {
  auto dir = test::scratch("pack-two");
  PackWriter w(dir / "p.bin", 2048, kEos, "fp");
  auto a = ids(1023, 0), b = ids(1023, 5000);
  w.add(a);
  w.add(b);
  auto m = w.finish();
  CHECK(m.sequence_count == 1);
  CHECK(m.dropped_remainder == 0);
  CHECK(m.eos_count == 2);
  CHECK(m.identity_holds());
  auto seqs = unpack_inspect(dir / "p.bin", 10, 2048);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0][1023] == kEos);
  CHECK(seqs[0][2047] == kEos);
  CHECK(seqs[0][0] == a[0]);
  CHECK(seqs[0][1024] == b[0]);
  CHECK(fs::file_size(dir / "p.bin") == kPackHeaderSize + 2048 * 4);
  fs::remove_all(dir);
}

TEST_CASE("conservation identity and content over 100 random streams", "[pack]") {
  auto dir = test::scratch("pack-random");
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const std::uint32_t L = 1 + static_cast<std::uint32_t>(rng.below(300));
    std::vector<std::uint32_t> flat;  // oracle: doc tokens then EOS, concatenated
    std::uint64_t doc_tokens = 0, docs = 0;
    PackWriter w(dir / "p.bin", L, kEos, "fp");
    const auto n = rng.below(40);
    for (std::uint64_t d = 0; d < n; ++d) {
      auto v = ids(rng.below(700), static_cast<std::uint32_t>(d * 7));
      w.add(v);
      if (v.empty()) continue;
      flat.insert(flat.end(), v.begin(), v.end());
      flat.push_back(kEos);
      doc_tokens += v.size();
      ++docs;
    }
    auto m = w.finish();
    INFO("L=" << L << " docs=" << docs);
    CHECK(m.identity_holds());
    CHECK(m.total_doc_tokens == doc_tokens);
    CHECK(m.eos_count == docs);
    CHECK(m.sequence_count == flat.size() / L);
    CHECK(m.dropped_remainder == flat.size() % L);
    CHECK(m.total_doc_tokens + m.eos_count == m.sequence_count * L + m.dropped_remainder);
    auto seqs = unpack_inspect(dir / "p.bin", SIZE_MAX, L);
    REQUIRE(seqs.size() == m.sequence_count);
    std::vector<std::uint32_t> got;
    for (const auto& s : seqs) got.insert(got.end(), s.begin(), s.end());
    CHECK(std::equal(got.begin(), got.end(), flat.begin()));
  }
  fs::remove_all(dir);
}

TEST_CASE("empty documents are skipped and counted", "[pack]") {
  auto dir = test::scratch("pack-empty");
  auto ws = TokenCounter::whitespace();
  std::vector<Document> docs{{"a", Lang::en, "one two", {}, {}}, {"b", Lang::en, "   ", {}, {}}, {"c", Lang::en, "x", {}, {}}};
  auto m = pack_documents(docs, ws, 2, dir / "p.bin");
  CHECK(m.skipped_empty_documents == 1);
  CHECK(m.documents == 2);
  CHECK(m.sequence_count == 2);  // one two EOS x EOS
  CHECK(m.dropped_remainder == 1);
  CHECK(m.tokenizer_fingerprint == ws.fingerprint());
  fs::remove_all(dir);
}

TEST_CASE("packing does not depend on worker count", "[pack]") {
  auto dir = test::scratch("pack-workers");
  auto ws = TokenCounter::whitespace();
  auto docs = test::corpus(5, 400, Lang::fr, 1, 10);
  set_worker_count(1);
  auto a = pack_documents(docs, ws, 64, dir / "a.bin");
  set_worker_count(6);
  auto b = pack_documents(docs, ws, 64, dir / "b.bin");
  set_worker_count(0);
  CHECK(a.to_json() == b.to_json());
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
  fs::remove_all(dir);
}

TEST_CASE("header validation", "[pack]") {
  auto dir = test::scratch("pack-header");
  {
    PackWriter w(dir / "p.bin", 4, kEos, "fp");
    auto v = ids(10, 0);
    w.add(v);
    w.finish();
  }
  auto h = read_pack_header(dir / "p.bin");
  CHECK(h.version == kPackVersion);
  CHECK(h.sequence_length == 4);
  CHECK(h.sequence_count == 2);
  CHECK(h.dtype == kPackDtypeU32);
  CHECK_THROWS_AS(read_pack_header(dir / "p.bin", 8), DataError);

  const auto good = slurp(dir / "p.bin");
  auto write = [&](const std::string& s) { std::ofstream(dir / "bad.bin", std::ios::binary) << s; };
  write(good.substr(0, good.size() - 4));
  CHECK_THROWS_AS(read_pack_header(dir / "bad.bin"), DataError);
  write(good + "xxxx");
  CHECK_THROWS_AS(read_pack_header(dir / "bad.bin"), DataError);
  write("NOPE" + good.substr(4));
  CHECK_THROWS_AS(read_pack_header(dir / "bad.bin"), DataError);
  write(good.substr(0, 10));
  CHECK_THROWS_AS(read_pack_header(dir / "bad.bin"), DataError);
  CHECK_THROWS_AS(read_pack_header(dir / "missing.bin"), IoError);
  CHECK(unpack_inspect(dir / "p.bin", 1).size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("batch arithmetic: 2048 x 1024 is about 2.10M tokens", "[pack]") {
  constexpr std::uint64_t tokens = 2048ULL * 1024ULL;
  CHECK(tokens == 2097152);
  CHECK(static_cast<double>(tokens) / 1e6 == Catch::Approx(2.10).margin(0.005));
}

TEST_CASE("manifest JSON", "[pack]") {
  PackManifest m;
  m.sequence_length = 8;
  m.sequence_count = 3;
  m.total_doc_tokens = 22;
  m.eos_count = 4;
  m.dropped_remainder = 2;
  CHECK(m.identity_holds());
  m.dropped_remainder = 10;  // not < L
  m.total_doc_tokens = 30;
  CHECK_FALSE(m.identity_holds());
  CHECK(m.to_json().contains("sequence_count"));
}
