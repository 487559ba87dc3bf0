#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "../support/synth.hpp"
#include "twp/error.hpp"
#include "twp/langid.hpp"

using namespace twp;
namespace fs = std::filesystem;

namespace {

const fs::path kLangid = fs::path(TWP_DATA_DIR) / "langid";

std::map<Lang, fs::path> seed_files() {
  std::map<Lang, fs::path> m;
  for (Lang l : kTargetLanguages) m[l] = kLangid / "train" / (std::string(to_string(l)) + ".txt");
  return m;
}

const LangIdModel& model() {
  static const LangIdModel m = LangIdModel::train_files(seed_files());
  return m;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string s;
  while (std::getline(in, s)) {
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

// Correct predictions on the 4 x 100 held-out sentences.
std::size_t heldout_correct(const LangIdModel& m, std::map<Lang, std::size_t>* per_lang = nullptr) {
  std::size_t ok = 0;
  for (Lang l : kTargetLanguages) {
    for (const auto& s : lines(kLangid / "heldout" / (std::string(to_string(l)) + ".txt"))) {
      const bool hit = m.classify(s).label == l;
      ok += hit;
      if (per_lang) (*per_lang)[l] += hit;
    }
  }
  return ok;
}

}  // namespace

TEST_CASE("held-out accuracy of at least 95% per language", "[langid]") {
  std::map<Lang, std::size_t> per;
  const auto ok = heldout_correct(model(), &per);
  for (Lang l : kTargetLanguages) {
    INFO(to_string(l) << " " << per[l] << "/100");
    CHECK(per[l] >= 95);
  }
  CHECK(ok >= 380);
}

TEST_CASE("classify examples", "[langid]") {
  auto de = model().classify("Der Himmel ist blau und die Wiese ist grün.");
  CHECK(de.label == Lang::de);
  CHECK(de.margin > model().margin_threshold());
  CHECK_FALSE(de.low_confidence);
  CHECK(model().classify("12345 67890").label == Lang::other);
  CHECK(model().classify("").label == Lang::other);
  CHECK(model().classify("Bonjour").low_confidence);

  const std::string t = "El perro duerme en la alfombra junto a la chimenea.";
  auto a = model().classify(t), b = model().classify(t);
  CHECK(a.log_prob == b.log_prob);
  CHECK(a.label == Lang::es);
  CHECK(a.to_json()["label"] == "es");
}

TEST_CASE("text preparation", "[langid]") {
  CHECK(LangIdModel::prepare("Hello,  WORLD!") == U" hello world ");
  CHECK(LangIdModel::prepare("Été 2024") == U" été ");
  CHECK(LangIdModel::prepare("") == U" ");
}

TEST_CASE("a high threshold abstains to other", "[langid]") {
  LangIdModel strict = model();
  strict.set_margin_threshold(100.0);
  auto s = strict.classify("The weather is lovely today and the birds are singing.");
  CHECK(s.label == Lang::other);
  CHECK(s.top == Lang::en);
}

TEST_CASE("save and load round-trip", "[langid]") {
  auto dir = test::scratch("langid-save");
  model().save(dir / "m.json");
  auto back = LangIdModel::load(dir / "m.json");
  CHECK(back.fingerprint() == model().fingerprint());
  CHECK(back.languages() == model().languages());
  for (const auto& s : lines(kLangid / "heldout" / "fr.txt")) CHECK(back.classify(s).log_prob == model().classify(s).log_prob);
  std::ofstream(dir / "bad.json") << "{\"nope\": 1}";
  CHECK_THROWS_AS(LangIdModel::load(dir / "bad.json"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("training needs enough text per language", "[langid]") {
  CHECK_THROWS_AS(LangIdModel::train({{Lang::en, "too short"}}), ConfigError);
  CHECK_THROWS_AS(LangIdModel::train({}), ConfigError);
  auto m = seed_files();
  m[Lang::es] = "/nonexistent/es.txt";
  CHECK_THROWS_AS(LangIdModel::train_files(m), ConfigError);
}

TEST_CASE("permutation stability: shuffled training lines change accuracy by <= 1%", "[langid]") {
  const auto base = heldout_correct(model());
  Rng rng(8);
  for (int t = 0; t < 3; ++t) {
    std::map<Lang, std::string> seeds;
    for (Lang l : kTargetLanguages) {
      auto ls = lines(seed_files()[l]);
      rng.shuffle(std::span<std::string>(ls));
      for (const auto& s : ls) seeds[l] += s + "\n";
    }
    const auto got = heldout_correct(LangIdModel::train(seeds));
    CHECK((got > base ? got - base : base - got) <= 4);
  }
}
