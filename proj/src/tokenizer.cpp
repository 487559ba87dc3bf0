#include "twp/tokenizer.hpp"

#include <climits>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "twp/error.hpp"
#include "twp/hash.hpp"
#include "twp/text.hpp"

namespace twp {

namespace {

constexpr std::string_view kWordPrefix = "\xE2\x96\x81";  // U+2581

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    return static_cast<std::size_t>(fnv1a64(p.second, fnv1a64(p.first) ^ 0x9e37));
  }
};

}  // namespace

struct TokenCounter::Impl {
  Mode mode = Mode::whitespace;
  std::uint32_t vocab_size = 0;
  std::uint32_t eos_id = 2;
  std::uint32_t unk_id = 0;
  std::string fingerprint;
  std::unordered_map<std::string, std::uint32_t> vocab;
  std::unordered_map<std::pair<std::string, std::string>, std::uint32_t, PairHash> ranks;
  std::uint32_t byte_ids[256] = {};
  bool has_bytes = false;

  std::vector<std::string> merge_word(std::string_view word) const {
    std::vector<std::string> syms;
    syms.emplace_back(kWordPrefix);
    for (std::size_t i = 0; i < word.size();) {
      auto d = text::decode(word, i);
      syms.emplace_back(word.substr(i, d.length));
      i += d.length;
    }
    while (syms.size() > 1) {
      std::uint32_t best = UINT32_MAX;
      std::size_t at = 0;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        auto it = ranks.find({syms[i], syms[i + 1]});
        if (it != ranks.end() && it->second < best) {
          best = it->second;
          at = i;
        }
      }
      if (best == UINT32_MAX) break;
      const std::string left = syms[at];
      const std::string right = syms[at + 1];
      std::vector<std::string> out;
      out.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
          out.push_back(left + right);
          i += 2;
        } else {
          out.push_back(std::move(syms[i]));
          ++i;
        }
      }
      syms = std::move(out);
    }
    return syms;
  }

  void emit_symbol(const std::string& sym, std::vector<std::uint32_t>& out) const {
    if (auto it = vocab.find(sym); it != vocab.end()) {
      out.push_back(it->second);
      return;
    }
    // Multi-codepoint symbols only arise from merges, so they are always in
    // the vocab; this is a single unknown code point.
    if (has_bytes) {
      for (unsigned char c : sym) out.push_back(byte_ids[c]);
    } else {
      out.push_back(unk_id);
    }
  }
};

TokenCounter TokenCounter::whitespace(std::uint32_t vocab_size, std::uint32_t eos_id) {
  if (vocab_size < 4 || eos_id >= 3) throw ConfigError("whitespace tokenizer: vocab_size must be >= 4 and eos_id < 3");
  auto impl = std::make_shared<Impl>();
  impl->mode = Mode::whitespace;
  impl->vocab_size = vocab_size;
  impl->eos_id = eos_id;
  impl->fingerprint = "whitespace-v1-" + std::to_string(vocab_size) + "-" + std::to_string(eos_id);
  return TokenCounter(std::move(impl));
}

TokenCounter TokenCounter::bpe(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt) {
  auto impl = std::make_shared<Impl>();
  impl->mode = Mode::bpe;
  const std::string vocab_bytes = slurp(vocab_json);
  const std::string merges_bytes = slurp(merges_txt);

  nlohmann::json v = nlohmann::json::parse(vocab_bytes, nullptr, false);
  if (v.is_discarded() || !v.is_object()) throw ConfigError(vocab_json.string() + ": not a JSON object");
  std::uint32_t max_id = 0;
  for (auto& [tok, id] : v.items()) {
    if (!id.is_number_unsigned()) throw ConfigError(vocab_json.string() + ": id of '" + tok + "' is not an unsigned integer");
    auto n = id.get<std::uint32_t>();
    impl->vocab.emplace(tok, n);
    max_id = std::max(max_id, n);
  }
  impl->vocab_size = max_id + 1;
  auto need = [&](const char* tok) {
    auto it = impl->vocab.find(tok);
    if (it == impl->vocab.end()) throw ConfigError(vocab_json.string() + ": missing special token " + tok);
    return it->second;
  };
  impl->eos_id = need("</s>");
  impl->unk_id = need("<unk>");
  impl->has_bytes = true;
  for (int b = 0; b < 256; ++b) {
    char name[8];
    std::snprintf(name, sizeof name, "<0x%02X>", b);
    auto it = impl->vocab.find(name);
    if (it == impl->vocab.end()) {
      impl->has_bytes = false;
      break;
    }
    impl->byte_ids[b] = it->second;
  }

  std::istringstream ms(merges_bytes);
  std::string line;
  std::uint32_t rank = 0;
  std::size_t line_no = 0;
  while (std::getline(ms, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.starts_with("#version")) continue;
    auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size()) {
      throw ConfigError(merges_txt.string() + ":" + std::to_string(line_no) + ": expected 'left right'");
    }
    impl->ranks.emplace(std::make_pair(line.substr(0, sp), line.substr(sp + 1)), rank++);
  }
  impl->fingerprint = "bpe-" + hex64(fnv1a64(merges_bytes, fnv1a64(vocab_bytes)));
  return TokenCounter(std::move(impl));
}

std::vector<std::uint32_t> TokenCounter::encode(std::string_view s) const {
  std::vector<std::uint32_t> out;
  const Impl& m = *impl_;
  text::for_each_word(s, [&](std::string_view w) {
    if (m.mode == Mode::whitespace) {
      out.push_back(3 + static_cast<std::uint32_t>(fnv1a64(w) % (m.vocab_size - 3)));
    } else {
      for (const auto& sym : m.merge_word(w)) m.emit_symbol(sym, out);
    }
  });
  return out;
}

std::uint64_t TokenCounter::count(std::string_view s) const {
  if (impl_->mode == Mode::whitespace) {
    std::uint64_t n = 0;
    text::for_each_word(s, [&](std::string_view) { ++n; });
    return n;
  }
  return encode(s).size();
}

std::vector<std::string> TokenCounter::bpe_word(std::string_view word) const {
  if (impl_->mode != Mode::bpe) throw Error("bpe_word on a whitespace tokenizer");
  return impl_->merge_word(word);
}

TokenCounter::Mode TokenCounter::mode() const { return impl_->mode; }
std::uint32_t TokenCounter::eos_id() const { return impl_->eos_id; }
std::uint32_t TokenCounter::vocab_size() const { return impl_->vocab_size; }
const std::string& TokenCounter::fingerprint() const { return impl_->fingerprint; }

}  // namespace twp
