#include <catch_amalgamated.hpp>

#include <fstream>

#include "../support/synth.hpp"
#include "twp/backend.hpp"
#include "twp/langid.hpp"
#include "twp/probe.hpp"

using namespace twp;
namespace fs = std::filesystem;

namespace {

const fs::path kLangid = fs::path(TWP_DATA_DIR) / "langid";

const LangIdModel& model() {
  static const LangIdModel m = [] {
    std::map<Lang, fs::path> seeds;
    for (Lang l : kTargetLanguages) seeds[l] = kLangid / "train" / (std::string(to_string(l)) + ".txt");
    return LangIdModel::train_files(seeds);
  }();
  return m;
}

std::vector<nlohmann::json> jsonl(const fs::path& p) {
  std::ifstream in(p);
  std::vector<nlohmann::json> out;
  std::string s;
  while (std::getline(in, s)) out.push_back(nlohmann::json::parse(s));
  return out;
}

ProbeParams fast(std::size_t n) {
  ProbeParams p;
  p.n = n;
  p.retry.initial_backoff = std::chrono::milliseconds(0);
  p.retry.attempts = 1;
  return p;
}

double pct_sum(const PriorReport& r) {
  double s = 0;
  for (Lang l : {Lang::en, Lang::fr, Lang::de, Lang::es, Lang::other}) s += r.percentage(l);
  return s;
}

const std::string kFr = "Le marché du samedi attire des habitants de tous les villages voisins depuis des années.";
const std::string kEs = "El mercado del sábado atrae a vecinos de todos los pueblos cercanos desde hace años.";

}  // namespace

TEST_CASE("detector: the generated-pair formats are caught", "[probe]") {
  auto pairs = jsonl(fs::path(TWP_FIXTURES) / "probe" / "pairs.jsonl");
  REQUIRE(pairs.size() == 4);
  for (const auto& p : pairs) {
    const std::string text = p["text"];
    INFO(text);
    auto d = detect_translation_pair(text, model());
    CHECK(d.is_pair);
    CHECK(d.rule == p["rule"].get<std::string>());
    CHECK_FALSE(d.evidence.empty());
  }
}

TEST_CASE("detector: 100 monolingual fixtures are not pairs", "[probe]") {
  auto mono = jsonl(fs::path(TWP_FIXTURES) / "probe" / "monolingual.jsonl");
  REQUIRE(mono.size() == 100);
  for (const auto& m : mono) {
    const std::string text = m["text"];
    INFO(text);
    auto d = detect_translation_pair(text, model());
    CHECK_FALSE(d.is_pair);
    CHECK(d.rule.empty());
  }
}

TEST_CASE("detector: rule (c) on alternating blocks", "[probe]") {
  auto d = detect_translation_pair(kFr + "\n" + kEs, model());
  CHECK(d.is_pair);
  CHECK(d.rule == "c");
  // Blocks shorter than the minimum are ignored.
  PairDetectorConfig cfg;
  cfg.min_block_chars = 500;
  CHECK_FALSE(detect_translation_pair(kFr + "\n" + kEs, model(), cfg).is_pair);
  // Same language twice is not a pair.
  CHECK_FALSE(detect_translation_pair(kFr + "\n" + kFr, model()).is_pair);
  // Rule (a) needs two different names.
  CHECK_FALSE(detect_translation_pair("English: one thing\nEnglish: another thing", model()).is_pair);
  CHECK(detect_translation_pair("French: un\nSpanish: uno", model()).rule == "a");
  CHECK_FALSE(detect_translation_pair("", model()).is_pair);
}

TEST_CASE("prior: 50% French / 50% Spanish fixture backend gives 50/50", "[probe]") {
  MockFixtureBackend b({kFr, kEs});
  auto r = probe_prior(b, model(), fast(512));
  CHECK(r.requested == 512);
  CHECK(r.obtained == 512);
  CHECK(r.counts.at(Lang::fr) == 256);
  CHECK(r.counts.at(Lang::es) == 256);
  CHECK(r.percentage(Lang::fr) == 50.0);
  CHECK(r.percentage(Lang::es) == 50.0);
  CHECK(r.percentage(Lang::en) == 0.0);
  CHECK(pct_sum(r) == Catch::Approx(100.0).margin(0.1));
  CHECK(r.translation_pairs == 0);
  auto j = r.to_json();
  CHECK(j["obtained"] == 512);
  CHECK(j["params"]["temperature"] == 1.0);
  CHECK(j["params"]["max_tokens"] == 300);
}

TEST_CASE("prior: failures reduce obtained; percentages still sum to 100", "[probe]") {
  struct Flaky final : Backend {
    std::atomic<int> n{0};
    CompletionResult complete(const CompletionRequest&) override {
      const int k = n++;
      if (k % 4 == 3) return BackendFailure{BackendFailure::Kind::permanent, "nope"};
      return k % 3 ? kFr : "Plain words here. " + kEs;
    }
    std::string describe() const override { return "flaky"; }
  } flaky;
  std::vector<nlohmann::ordered_json> evidence;
  std::mutex mu;
  auto r = probe_prior(flaky, model(), fast(100), {}, [&](const nlohmann::ordered_json& e) {
    std::lock_guard lk(mu);
    evidence.push_back(e);
  });
  CHECK(r.requested == 100);
  CHECK(r.obtained == 75);
  REQUIRE(evidence.size() == 100);  // failed generations are recorded too
  std::size_t failed = 0;
  for (const auto& e : evidence) failed += e["status"] == "failed";
  CHECK(failed == 25);
  CHECK(pct_sum(r) == Catch::Approx(100.0).margin(0.1));
}

TEST_CASE("prior: pair outputs are counted", "[probe]") {
  auto pairs = jsonl(fs::path(TWP_FIXTURES) / "probe" / "pairs.jsonl");
  MockFixtureBackend b({pairs[0]["text"], pairs[3]["text"], kFr, kEs});
  auto r = probe_prior(b, model(), fast(40));
  CHECK(r.translation_pairs == 20);
  CHECK(r.translation_pair_percentage() == 50.0);
}

TEST_CASE("prior: zero generations", "[probe]") {
  MockFixtureBackend b({kFr});
  auto r = probe_prior(b, model(), fast(0));
  CHECK(r.obtained == 0);
  CHECK(r.percentage(Lang::fr) == 0.0);
}
