#include "twp/dedup.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "twp/error.hpp"
#include "twp/hash.hpp"
#include "twp/parallel.hpp"
#include "twp/text.hpp"

namespace twp {

using nlohmann::ordered_json;

void DedupParams::validate() const {
  std::vector<std::string> d;
  if (num_perm == 0) d.push_back("dedup.num_perm: must be > 0");
  if (bands * rows != num_perm) {
    d.push_back("dedup.bands x dedup.rows must equal dedup.num_perm (" + std::to_string(bands) + " x " +
                std::to_string(rows) + " != " + std::to_string(num_perm) + ")");
  }
  if (shingle_n == 0) d.push_back("dedup.shingle_n: must be > 0");
  if (!(threshold >= 0.0 && threshold <= 1.0)) d.push_back("dedup.threshold: must be in [0, 1]");
  if (!d.empty()) throw ConfigError(std::move(d));
}

ordered_json DedupParams::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["threshold"] = threshold;
  j["num_perm"] = num_perm;
  j["bands"] = bands;
  j["rows"] = rows;
  j["shingle"] = "word " + std::to_string(shingle_n) + "-gram";
  j["normalization"] = "lowercase; strip non-letter/digit; collapse whitespace";
  j["verification"] = exact ? "exact shingle Jaccard" : "signature estimate";
  j["confirm"] = "similarity > threshold";
  j["representative"] = "lexicographically smallest id";
  j["scope"] = "per language";
  return j;
}

std::string normalize_for_dedup(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size();) {
    auto d = text::decode(s, i);
    i += d.length;
    if (text::is_whitespace(d.cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (!text::is_letter(d.cp) && !text::is_digit(d.cp)) continue;
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    text::append_utf8(out, text::to_lower(d.cp));
  }
  return out;
}

std::vector<std::uint64_t> shingle_set(std::string_view raw, std::size_t n) {
  const std::string norm = normalize_for_dedup(raw);
  std::vector<std::uint64_t> out;
  if (norm.empty()) return out;
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < norm.size(); ++i) {
    if (norm[i] == ' ') starts.push_back(i + 1);
  }
  const std::size_t words = starts.size();
  if (words < n) {
    out.push_back(fnv1a64(norm));
    return out;
  }
  out.reserve(words - n + 1);
  for (std::size_t w = 0; w + n <= words; ++w) {
    const std::size_t b = starts[w];
    const std::size_t e = w + n < words ? starts[w + n] - 1 : norm.size();
    out.push_back(fnv1a64(std::string_view(norm).substr(b, e - b)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double exact_jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

MinHasher::MinHasher(std::uint64_t seed, std::size_t num_perm) : seed_(seed) {
  std::uint64_t state = seed;
  salts_.resize(num_perm);
  for (auto& s : salts_) s = splitmix64(state);
}

MinHashSignature MinHasher::signature(std::span<const std::uint64_t> shingles) const {
  if (shingles.empty()) throw DataError("cannot sign a document with an empty normalized text");
  MinHashSignature sig{seed_, std::vector<std::uint64_t>(salts_.size(), UINT64_MAX)};
  for (std::uint64_t x : shingles) {
    for (std::size_t k = 0; k < salts_.size(); ++k) {
      sig.values[k] = std::min(sig.values[k], fmix64(x ^ salts_[k]));
    }
  }
  return sig;
}

MinHashSignature MinHasher::signature_of_text(std::string_view text, std::size_t shingle_n) const {
  auto sh = shingle_set(text, shingle_n);
  return signature(sh);
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.seed != b.seed) throw DataError("signatures come from different seeds");
  if (a.values.size() != b.values.size() || a.values.empty()) throw DataError("signature lengths differ");
  std::size_t agree = 0;
  for (std::size_t k = 0; k < a.values.size(); ++k) agree += a.values[k] == b.values[k];
  return static_cast<double>(agree) / static_cast<double>(a.values.size());
}

LshIndex::LshIndex(std::size_t bands, std::size_t rows) : bands_(bands), rows_(rows) {
  if (bands == 0 || rows == 0) throw ConfigError("LSH needs at least one band and one row");
}

void LshIndex::insert(std::size_t item, const MinHashSignature& sig) {
  if (sig.values.size() != bands_ * rows_) throw DataError("signature length does not match LSH bands x rows");
  sigs_.push_back(&sig);
  items_.push_back(item);
}

std::vector<std::pair<std::size_t, std::size_t>> LshIndex::candidate_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::pair<std::uint64_t, std::size_t>> keys(sigs_.size());
  for (std::size_t b = 0; b < bands_; ++b) {
    const std::size_t off = b * rows_;
    for (std::size_t i = 0; i < sigs_.size(); ++i) {
      std::uint64_t h = 0x9e3779b97f4a7c15ULL * (b + 1);
      for (std::size_t r = 0; r < rows_; ++r) h = fmix64(h ^ sigs_[i]->values[off + r]);
      keys[i] = {h, i};
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t s = 0; s < keys.size();) {
      std::size_t e = s + 1;
      while (e < keys.size() && keys[e].first == keys[s].first) ++e;
      for (std::size_t x = s; x < e; ++x) {
        for (std::size_t y = x + 1; y < e; ++y) {
          const auto& va = sigs_[keys[x].second]->values;
          const auto& vb = sigs_[keys[y].second]->values;
          // Bucket keys can collide; the rows themselves decide.
          if (!std::equal(va.begin() + off, va.begin() + off + rows_, vb.begin() + off)) continue;
          auto i = items_[keys[x].second];
          auto j = items_[keys[y].second];
          pairs.emplace_back(std::min(i, j), std::max(i, j));
        }
      }
      s = e;
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

DedupResult dedup_documents(std::span<const Document> docs, const DedupParams& params) {
  params.validate();
  {
    std::vector<std::string_view> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(d.id);
    std::sort(ids.begin(), ids.end());
    if (auto it = std::adjacent_find(ids.begin(), ids.end()); it != ids.end()) {
      throw DataError("duplicate document id '" + std::string(*it) + "'");
    }
  }
  const MinHasher hasher(params.seed, params.num_perm);
  const std::size_t n = docs.size();
  std::vector<std::vector<std::uint64_t>> shingles(n);
  std::vector<MinHashSignature> sigs(n);

  // Signatures in parallel over contiguous slices.
  const std::size_t workers = worker_count();
  const std::size_t per = (n + workers - 1) / workers;
  std::vector<std::future<void>> tasks;
  for (std::size_t w = 0; w < workers && w * per < n; ++w) {
    tasks.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w * per; i < std::min(n, (w + 1) * per); ++i) {
        shingles[i] = shingle_set(docs[i].text, params.shingle_n);
        if (!shingles[i].empty()) sigs[i] = hasher.signature(shingles[i]);
        if (!params.exact) std::vector<std::uint64_t>().swap(shingles[i]);
      }
    }));
  }
  for (auto& t : tasks) t.get();

  DedupResult res;
  res.keep.assign(n, true);
  std::map<Lang, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < n; ++i) {
    if (sigs[i].values.empty()) {
      ++res.empty_normalized;
      continue;
    }
    by_lang[docs[i].lang].push_back(i);
  }

  for (const auto& [lang, members] : by_lang) {
    LshIndex index(params.bands, params.rows);
    for (std::size_t i : members) index.insert(i, sigs[i]);
    auto cands = index.candidate_pairs();
    res.candidate_pairs += cands.size();

    UnionFind uf(n);
    std::vector<std::tuple<std::size_t, std::size_t, double>> confirmed;
    for (auto [a, b] : cands) {
      const double sim = params.exact ? exact_jaccard(shingles[a], shingles[b]) : estimate_jaccard(sigs[a], sigs[b]);
      if (sim > params.threshold) {
        confirmed.emplace_back(a, b, sim);
        uf.unite(a, b);
      }
    }
    res.confirmed_pairs += confirmed.size();

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i : members) groups[uf.find(i)].push_back(i);
    std::map<std::size_t, DedupCluster*> cluster_of_root;
    std::vector<DedupCluster> lang_clusters;
    lang_clusters.reserve(groups.size());
    for (auto& [root, idx] : groups) {
      if (idx.size() < 2) continue;
      auto best = *std::min_element(idx.begin(), idx.end(),
                                    [&](std::size_t x, std::size_t y) { return docs[x].id < docs[y].id; });
      DedupCluster c;
      c.lang = lang;
      c.kept = docs[best].id;
      for (std::size_t i : idx) {
        if (i == best) continue;
        res.keep[i] = false;
        c.removed.push_back(docs[i].id);
      }
      std::sort(c.removed.begin(), c.removed.end());
      lang_clusters.push_back(std::move(c));
      cluster_of_root[root] = &lang_clusters.back();
    }
    for (auto& [a, b, sim] : confirmed) {
      auto& c = *cluster_of_root.at(uf.find(a));
      auto ia = docs[a].id, ib = docs[b].id;
      if (ib < ia) std::swap(ia, ib);
      c.estimates.emplace_back(std::move(ia), std::move(ib), sim);
    }
    for (auto& c : lang_clusters) {
      std::sort(c.estimates.begin(), c.estimates.end());
    }
    std::sort(lang_clusters.begin(), lang_clusters.end(),
              [](const DedupCluster& x, const DedupCluster& y) { return x.kept < y.kept; });
    for (auto& c : lang_clusters) res.clusters.push_back(std::move(c));
  }
  return res;
}

ordered_json DedupSummary::to_json() const {
  ordered_json j;
  j["input"] = input;
  j["kept"] = kept;
  j["removed"] = removed;
  j["clusters"] = clusters;
  j["candidate_pairs"] = candidate_pairs;
  j["confirmed_pairs"] = confirmed_pairs;
  j["empty_normalized_kept"] = empty_normalized;
  return j;
}

DedupSummary dedup_corpus(const std::filesystem::path& input, const DedupParams& params,
                          const std::filesystem::path& out_dir) {
  auto docs = read_all(input, ReadMode::strict);
  auto res = dedup_documents(docs, params);
  std::filesystem::create_directories(out_dir);

  DedupSummary sum;
  sum.input = docs.size();
  {
    CorpusWriter kept(out_dir / "kept.jsonl");
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (res.keep[i]) kept.write(docs[i]);
    }
    kept.flush();
    sum.kept = kept.documents_written();
  }
  CorpusWriter manifest(out_dir / "clusters.jsonl");
  ordered_json header;
  header["_header"] = true;
  header.update(params.to_json());
  manifest.write_json(header);
  for (const auto& c : res.clusters) {
    ordered_json j;
    j["lang"] = to_string(c.lang);
    j["kept"] = c.kept;
    j["removed"] = c.removed;
    j["estimates"] = ordered_json::array();
    for (const auto& [a, b, s] : c.estimates) j["estimates"].push_back({a, b, s});
    manifest.write_json(j);
    sum.removed += c.removed.size();
  }
  manifest.flush();
  sum.clusters = res.clusters.size();
  sum.candidate_pairs = res.candidate_pairs;
  sum.confirmed_pairs = res.confirmed_pairs;
  sum.empty_normalized = res.empty_normalized;
  return sum;
}

}  // namespace twp
