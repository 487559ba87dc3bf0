#include "twp/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "twp/error.hpp"
#include "twp/hash.hpp"
#include "twp/mixer.hpp"
#include "twp/text.hpp"

namespace twp {

namespace fs = std::filesystem;

namespace {

const fs::path kDataDir = TWP_DATA_DIR;

std::string quote(std::string_view v) {
  std::string out = "\"";
  for (char c : v) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::vector<std::string> split_dots(std::string_view key) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto d = key.find('.', pos);
    out.emplace_back(key.substr(pos, d == std::string_view::npos ? std::string_view::npos : d - pos));
    if (d == std::string_view::npos) break;
    pos = d + 1;
  }
  return out;
}

bool is_lang_tag(std::string_view s) {
  auto l = parse_lang(s);
  return l && *l != Lang::other;
}

}  // namespace

Config Config::defaults() {
  Config c;
  auto d = [&](std::string k, std::string v) { c.entries_[std::move(k)] = {std::move(v), "default"}; };
  d("global.seed", "1234");
  d("global.workers", "0");
  d("tokenizer.mode", "bpe");
  d("tokenizer.vocab", (kDataDir / "tokenizer" / "vocab.json").string());
  d("tokenizer.merges", (kDataDir / "tokenizer" / "merges.txt").string());
  d("tokenizer.vocab_size", "32000");
  d("tokenizer.eos_id", "2");
  d("segment.chunk_limit", "300");
  for (Lang l : kTargetLanguages) {
    const std::string t(to_string(l));
    d("segment.abbreviations." + t, (kDataDir / "abbreviations" / (t + ".txt")).string());
    d("quality.stopwords." + t, (kDataDir / "stopwords" / (t + ".txt")).string());
    d("langid.seed." + t, (kDataDir / "langid" / "train" / (t + ".txt")).string());
  }
  d("translate.enabled", "true");
  d("translate.source", "en");
  d("translate.targets", "fr,de,es");
  d("translate.max_tokens", "600");
  d("translate.temperature", "0.0");
  d("translate.max_in_flight", "32");
  d("translate.retry.attempts", "3");
  d("translate.retry.backoff_ms", "1000");
  d("translate.template.open", "[INST]");
  d("translate.template.close", "[/INST]");
  d("translate.template.instruction", std::string(PromptTemplate::kDefaultInstruction));
  d("backend.kind", "mock-echo");
  d("backend.endpoint", "http://127.0.0.1:8000/v1/completions");
  d("backend.model", "mistral-7b-instruct");
  d("backend.response_path", "choices.0.text");
  d("backend.timeout_s", "120");
  d("backend.fail_on", "");
  d("backend.fail_permanent", "false");
  d("backend.delay_ms", "0");
  d("backend.fixture_file", "");
  d("quality.word_count.enabled", "true");
  d("quality.word_count.min", "50");
  d("quality.word_count.max", "100000");
  d("quality.mean_word_length.enabled", "true");
  d("quality.mean_word_length.min", "3.0");
  d("quality.mean_word_length.max", "10.0");
  d("quality.symbol_ratio.enabled", "true");
  d("quality.symbol_ratio.max", "0.1");
  d("quality.bullet_lines.enabled", "true");
  d("quality.bullet_lines.max", "0.9");
  d("quality.ellipsis_lines.enabled", "true");
  d("quality.ellipsis_lines.max", "0.3");
  d("quality.alphabetic_words.enabled", "true");
  d("quality.alphabetic_words.min", "0.8");
  d("quality.stop_words.enabled", "true");
  d("quality.stop_words.min", "2");
  d("quality.duplicate_lines.enabled", "false");
  d("quality.duplicate_lines.max", "0.3");
  d("quality.duplicate_paragraphs.enabled", "false");
  d("quality.duplicate_paragraphs.max", "0.3");
  d("dedup.threshold", "0.8");
  d("dedup.num_perm", "128");
  d("dedup.bands", "16");
  d("dedup.rows", "8");
  d("dedup.shingle_n", "5");
  d("dedup.exact", "false");
  d("mix.stages", "pretrain");
  d("mix.pack_stage", "pretrain");
  d("mix.shuffle_buffer", "100000");
  d("pack.sequence_length", "2048");
  d("pack.batch_size", "1024");
  d("probe.n", "512");
  d("probe.max_tokens", "300");
  d("probe.temperature", "1.0");
  d("probe.prompt", "");
  d("probe.max_in_flight", "32");
  d("probe.pair_margin", "0.6");
  d("probe.min_block_chars", "20");
  d("langid.margin_threshold", "0.15");
  d("langid.model", "");
  return c;
}

bool Config::is_path_key(std::string_view key) {
  if (key == "tokenizer.vocab" || key == "tokenizer.merges" || key == "backend.fixture_file" ||
      key == "langid.model") {
    return true;
  }
  if (key.starts_with("segment.abbreviations.") || key.starts_with("quality.stopwords.") ||
      key.starts_with("langid.seed.")) {
    return true;
  }
  auto parts = split_dots(key);
  return parts.size() == 4 && parts[0] == "mix" && parts[2] == "source";
}

std::string Config::env_name(std::string_view key) {
  std::string out = "TWP_";
  for (char c : key) {
    if (c == '.' || c == '-') out += '_';
    else if (c >= 'a' && c <= 'z') out += static_cast<char>(c - 32);
    else out += c;
  }
  return out;
}

void Config::set(const std::string& key, std::string value, std::string origin) {
  entries_[key] = {std::move(value), std::move(origin)};
}

std::optional<std::string> Config::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

void Config::load_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  parse(ss.str(), fs::absolute(path).parent_path(), path.string());
}

void Config::parse(std::string_view content, const fs::path& base_dir, const std::string& origin) {
  std::vector<std::string> diags;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      diags.push_back(where + ": expected 'key = value'");
      continue;
    }
    std::string key(text::trim(t.substr(0, eq)));
    auto rest = text::trim(t.substr(eq + 1));
    if (!valid_key(key)) {
      diags.push_back(where + ": invalid key '" + key + "' (lowercase letters, digits, '.', '_', '-')");
      continue;
    }
    std::string value;
    if (!rest.empty() && rest.front() == '"') {
      std::size_t i = 1;
      bool closed = false;
      for (; i < rest.size(); ++i) {
        char c = rest[i];
        if (c == '"') {
          closed = true;
          ++i;
          break;
        }
        if (c == '\\' && i + 1 < rest.size()) {
          char e = rest[++i];
          switch (e) {
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            case 'r': value += '\r'; break;
            case '"': value += '"'; break;
            case '\\': value += '\\'; break;
            default:
              diags.push_back(where + ": unknown escape \\" + std::string(1, e));
          }
          continue;
        }
        value += c;
      }
      if (!closed) {
        diags.push_back(where + ": unterminated quoted value");
        continue;
      }
      auto tail = text::trim(rest.substr(i));
      if (!tail.empty() && tail.front() != '#') {
        diags.push_back(where + ": unexpected text after quoted value");
        continue;
      }
    } else {
      auto hash = rest.find('#');
      value = std::string(text::trim(rest.substr(0, hash)));
    }
    if (is_path_key(key) && !value.empty() && value.front() != '@' && fs::path(value).is_relative()) {
      value = (base_dir / value).lexically_normal().string();
    }
    set(key, std::move(value), origin);
  }
  if (!diags.empty()) throw ConfigError(std::move(diags));
}

void Config::apply_env() {
  for (auto& [key, entry] : entries_) {
    const auto name = env_name(key);
    if (const char* v = std::getenv(name.c_str())) {
      entry = {v, "env:" + name};
    }
  }
}

std::string Config::snapshot() const {
  std::string out;
  for (const auto& [k, e] : entries_) out += k + " = " + quote(e.value) + "\n";
  return out;
}

Config load_config(const std::optional<fs::path>& file, const std::vector<std::pair<std::string, std::string>>& overrides) {
  Config c = Config::defaults();
  if (file) c.load_file(*file);
  c.apply_env();
  for (const auto& [k, v] : overrides) c.set(k, v, "cli");
  return c;
}

namespace {

// Collects one diagnostic per bad field while reading typed values.
class Reader {
 public:
  explicit Reader(const Config& c) : c_(c) {}

  std::vector<std::string> diags;

  std::string str(const std::string& key) {
    used_.insert(key);
    auto v = c_.get(key);
    if (!v) {
      diags.push_back(key + ": missing");
      return {};
    }
    return *v;
  }
  std::optional<std::string> opt(const std::string& key) {
    used_.insert(key);
    return c_.get(key);
  }
  std::uint64_t u64(const std::string& key, std::uint64_t min = 0, std::uint64_t max = UINT64_MAX) {
    auto s = str(key);
    try {
      std::size_t n = 0;
      if (s.empty() || s.front() == '-') throw std::invalid_argument("");
      auto v = std::stoull(s, &n, 0);
      if (n != s.size()) throw std::invalid_argument("");
      if (v < min || v > max) {
        diags.push_back(key + ": " + s + " is out of range [" + std::to_string(min) + ", " + std::to_string(max) + "]");
      }
      return v;
    } catch (const std::exception&) {
      diags.push_back(key + ": expected a non-negative integer, got '" + s + "'");
      return min;
    }
  }
  double real(const std::string& key, double min, double max) {
    auto s = str(key);
    try {
      std::size_t n = 0;
      double v = std::stod(s, &n);
      if (n != s.size()) throw std::invalid_argument("");
      if (!(v >= min && v <= max)) {
        diags.push_back(key + ": " + s + " is out of range [" + fmt(min) + ", " + fmt(max) + "]");
      }
      return v;
    } catch (const std::exception&) {
      diags.push_back(key + ": expected a number, got '" + s + "'");
      return min;
    }
  }
  bool boolean(const std::string& key) {
    auto s = str(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off" || s.empty()) return false;
    diags.push_back(key + ": expected true/false, got '" + s + "'");
    return false;
  }
  std::optional<Lang> lang(const std::string& key, bool allow_other = false) {
    auto s = str(key);
    auto l = parse_lang(s);
    if (!l || (!allow_other && *l == Lang::other)) {
      diags.push_back(key + ": unknown language '" + s + "' (en, fr, de, es)");
      return std::nullopt;
    }
    return l;
  }
  fs::path file(const std::string& key) {
    auto s = str(key);
    if (s.empty()) {
      diags.push_back(key + ": path is empty");
    } else if (!fs::is_regular_file(s)) {
      diags.push_back(key + ": file not found: " + s);
    }
    return s;
  }
  void check_unused() {
    for (const auto& [k, e] : c_.entries()) {
      if (!used_.contains(k)) diags.push_back(k + ": unknown setting (from " + e.origin + ")");
    }
  }
  template <class F>
  void guard(const std::string& key, F&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      for (const auto& d : e.diagnostics()) diags.push_back(d);
    } catch (const std::exception& e) {
      diags.push_back(key + ": " + e.what());
    }
  }
  const Config& config() const { return c_; }
  void mark(const std::string& key) { used_.insert(key); }

 private:
  static std::string fmt(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  }
  const Config& c_;
  std::set<std::string> used_;
};

}  // namespace

PipelineConfig PipelineConfig::resolve(const Config& config) {
  Reader r(config);
  PipelineConfig p;
  p.seed = r.u64("global.seed");
  p.workers = r.u64("global.workers", 0, 4096);

  // tokenizer
  const auto mode = r.str("tokenizer.mode");
  const auto vocab_size = r.u64("tokenizer.vocab_size", 4, UINT32_MAX);
  const auto eos_id = r.u64("tokenizer.eos_id", 0, 2);
  if (mode == "bpe") {
    auto v = r.file("tokenizer.vocab");
    auto m = r.file("tokenizer.merges");
    if (fs::is_regular_file(v) && fs::is_regular_file(m)) r.guard("tokenizer", [&] { p.counter = TokenCounter::bpe(v, m); });
  } else if (mode == "whitespace") {
    r.mark("tokenizer.vocab");
    r.mark("tokenizer.merges");
    r.guard("tokenizer", [&] {
      p.counter = TokenCounter::whitespace(static_cast<std::uint32_t>(vocab_size), static_cast<std::uint32_t>(eos_id));
    });
  } else {
    r.diags.push_back("tokenizer.mode: expected 'bpe' or 'whitespace', got '" + mode + "'");
  }

  // segment
  p.chunk_limit = r.u64("segment.chunk_limit", 1);
  for (Lang l : kTargetLanguages) {
    const std::string key = "segment.abbreviations." + std::string(to_string(l));
    if (auto v = r.opt(key); v && !v->empty()) {
      auto path = r.file(key);
      if (fs::is_regular_file(path)) r.guard(key, [&] { p.abbreviations.load(l, path); });
    }
  }

  // translate
  p.translate_enabled = r.boolean("translate.enabled");
  if (auto s = r.lang("translate.source")) p.source = *s;
  {
    auto list = r.str("translate.targets");
    std::set<Lang> seen;
    std::size_t pos = 0;
    while (pos <= list.size()) {
      auto comma = list.find(',', pos);
      auto item = std::string(text::trim(std::string_view(list).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
      pos = comma == std::string::npos ? list.size() + 1 : comma + 1;
      if (item.empty()) continue;
      auto l = parse_lang(item);
      if (!l || *l == Lang::other) {
        r.diags.push_back("translate.targets: unknown target language '" + item + "'");
      } else if (*l == p.source) {
        r.diags.push_back("translate.targets: '" + item + "' is the source language");
      } else if (seen.insert(*l).second) {
        p.targets.push_back(*l);
      }
    }
    if (p.targets.empty() && p.translate_enabled) r.diags.push_back("translate.targets: no target languages");
  }
  p.translate.chunk_limit = p.chunk_limit;
  p.translate.params.max_tokens = static_cast<std::uint32_t>(r.u64("translate.max_tokens", 1, 1u << 20));
  p.translate.params.temperature = r.real("translate.temperature", 0.0, 10.0);
  p.translate.max_in_flight = r.u64("translate.max_in_flight", 1, 4096);
  p.translate.retry.attempts = static_cast<int>(r.u64("translate.retry.attempts", 1, 100));
  p.translate.retry.initial_backoff = std::chrono::milliseconds(r.u64("translate.retry.backoff_ms", 0, 3600000));
  p.prompt.wrapper_open = r.str("translate.template.open");
  p.prompt.wrapper_close = r.str("translate.template.close");
  p.prompt.instruction = r.str("translate.template.instruction");

  // Dynamic keys: per-target template overrides and display names.
  for (const auto& [key, e] : config.entries()) {
    auto parts = split_dots(key);
    if (parts.size() == 4 && parts[0] == "translate" && parts[1] == "template" && parts[3] == "instruction") {
      r.mark(key);
      if (!is_lang_tag(parts[2])) {
        r.diags.push_back(key + ": unknown target language '" + parts[2] + "'");
        continue;
      }
      p.prompt.overrides[*parse_lang(parts[2])] = e.value;
    } else if (parts.size() == 3 && parts[0] == "translate" && parts[1] == "language_name") {
      r.mark(key);
      if (!is_lang_tag(parts[2])) {
        r.diags.push_back(key + ": unknown language '" + parts[2] + "'");
        continue;
      }
      p.prompt.language_names[*parse_lang(parts[2])] = e.value;
    }
  }
  r.guard("translate.template", [&] { p.prompt.validate(); });

  // backend
  p.backend.kind = r.str("backend.kind");
  p.backend.http.endpoint = r.str("backend.endpoint");
  p.backend.http.model = r.str("backend.model");
  p.backend.http.response_path = r.str("backend.response_path");
  p.backend.http.timeout = std::chrono::seconds(r.u64("backend.timeout_s", 1, 86400));
  p.backend.fail_on = r.str("backend.fail_on");
  p.backend.fail_permanent = r.boolean("backend.fail_permanent");
  p.backend.delay = std::chrono::milliseconds(r.u64("backend.delay_ms", 0, 600000));
  {
    auto fixture = r.str("backend.fixture_file");
    if (p.backend.kind == "mock-fixture") {
      if (fixture.empty()) {
        r.diags.push_back("backend.fixture_file: required for backend.kind = mock-fixture");
      } else {
        r.guard("backend.fixture_file", [&] {
          std::ifstream in(fixture);
          if (!in) throw ConfigError("backend.fixture_file: cannot open " + fixture);
          std::string line;
          while (std::getline(in, line)) {
            if (text::trim(line).empty()) continue;
            auto j = nlohmann::json::parse(line);
            p.backend.fixture_texts.push_back(j.is_string() ? j.get<std::string>() : j.at("text").get<std::string>());
          }
          if (p.backend.fixture_texts.empty()) throw ConfigError("backend.fixture_file: no texts in " + fixture);
        });
      }
    }
    static const std::set<std::string> kinds = {"mock-echo", "mock-cipher", "mock-fixture", "http"};
    if (!kinds.contains(p.backend.kind)) {
      r.diags.push_back("backend.kind: unknown backend '" + p.backend.kind + "' (mock-echo, mock-cipher, mock-fixture, http)");
    } else if (p.backend.kind == "http") {
      r.guard("backend.endpoint", [&] { HttpCompletionBackend probe(p.backend.http); });
    }
  }

  // quality
  auto& q = p.quality;
  q.word_count = r.boolean("quality.word_count.enabled");
  q.min_words = r.u64("quality.word_count.min");
  q.max_words = r.u64("quality.word_count.max");
  if (q.min_words > q.max_words) r.diags.push_back("quality.word_count: min exceeds max");
  q.mean_word_length = r.boolean("quality.mean_word_length.enabled");
  q.min_mean_word_length = r.real("quality.mean_word_length.min", 0.0, 1e9);
  q.max_mean_word_length = r.real("quality.mean_word_length.max", 0.0, 1e9);
  if (q.min_mean_word_length > q.max_mean_word_length) r.diags.push_back("quality.mean_word_length: min exceeds max");
  q.symbol_ratio = r.boolean("quality.symbol_ratio.enabled");
  q.max_symbol_ratio = r.real("quality.symbol_ratio.max", 0.0, 1e9);
  q.bullet_lines = r.boolean("quality.bullet_lines.enabled");
  q.max_bullet_line_fraction = r.real("quality.bullet_lines.max", 0.0, 1.0);
  q.ellipsis_lines = r.boolean("quality.ellipsis_lines.enabled");
  q.max_ellipsis_line_fraction = r.real("quality.ellipsis_lines.max", 0.0, 1.0);
  q.alphabetic_words = r.boolean("quality.alphabetic_words.enabled");
  q.min_alphabetic_word_fraction = r.real("quality.alphabetic_words.min", 0.0, 1.0);
  q.stop_words = r.boolean("quality.stop_words.enabled");
  q.min_stop_words = r.u64("quality.stop_words.min");
  q.duplicate_lines = r.boolean("quality.duplicate_lines.enabled");
  q.max_duplicate_line_fraction = r.real("quality.duplicate_lines.max", 0.0, 1.0);
  q.duplicate_paragraphs = r.boolean("quality.duplicate_paragraphs.enabled");
  q.max_duplicate_paragraph_fraction = r.real("quality.duplicate_paragraphs.max", 0.0, 1.0);
  for (Lang l : kTargetLanguages) {
    const std::string key = "quality.stopwords." + std::string(to_string(l));
    auto v = r.opt(key);
    if (!v || v->empty()) continue;
    auto path = r.file(key);
    if (fs::is_regular_file(path)) r.guard(key, [&] { q.load_stop_words(l, path); });
  }

  // dedup
  p.dedup.seed = derive_seed(p.seed, "dedup");
  if (r.opt("dedup.seed")) p.dedup.seed = r.u64("dedup.seed");
  p.dedup.threshold = r.real("dedup.threshold", 0.0, 1.0);
  p.dedup.num_perm = r.u64("dedup.num_perm", 1, 4096);
  p.dedup.bands = r.u64("dedup.bands", 1, 4096);
  p.dedup.rows = r.u64("dedup.rows", 1, 4096);
  p.dedup.shingle_n = r.u64("dedup.shingle_n", 1, 64);
  p.dedup.exact = r.boolean("dedup.exact");
  r.guard("dedup", [&] { p.dedup.validate(); });

  // mix
  p.shuffle_buffer = r.u64("mix.shuffle_buffer", 1);
  p.pack_stage = r.str("mix.pack_stage");
  {
    auto list = r.str("mix.stages");
    std::set<std::string> names;
    std::size_t pos = 0;
    while (pos <= list.size()) {
      auto comma = list.find(',', pos);
      auto item = std::string(text::trim(std::string_view(list).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
      pos = comma == std::string::npos ? list.size() + 1 : comma + 1;
      if (item.empty()) continue;
      if (!valid_key(item) || item.find('.') != std::string::npos) {
        r.diags.push_back("mix.stages: invalid stage name '" + item + "'");
        continue;
      }
      if (names.insert(item).second) p.stages.push_back({item, {}, {}, {}, std::nullopt, false});
    }
    if (p.stages.empty()) r.diags.push_back("mix.stages: no stages");
    if (!names.contains(p.pack_stage)) r.diags.push_back("mix.pack_stage: '" + p.pack_stage + "' is not listed in mix.stages");
  }
  for (const auto& [key, e] : config.entries()) {
    auto parts = split_dots(key);
    if (parts.size() < 3 || parts[0] != "mix" || parts[1] == "stages" || parts[1] == "pack_stage" ||
        parts[1] == "shuffle_buffer") {
      continue;
    }
    r.mark(key);
    auto st = std::find_if(p.stages.begin(), p.stages.end(), [&](const auto& s) { return s.name == parts[1]; });
    if (st == p.stages.end()) {
      r.diags.push_back(key + ": stage '" + parts[1] + "' is not listed in mix.stages");
      continue;
    }
    if (parts.size() == 3 && parts[2] == "total_tokens") {
      st->total_tokens = r.u64(key);
    } else if (parts.size() == 4 && parts[2] == "source") {
      if (e.value.starts_with("@")) {
        if (!is_lang_tag(e.value.substr(1))) r.diags.push_back(key + ": unknown language reference '" + e.value + "'");
      } else if (!fs::is_regular_file(e.value)) {
        // Checked again at run time; sources may be produced by earlier stages.
        r.diags.push_back(key + ": file not found: " + e.value);
      }
      st->sources.emplace_back(parts[3], e.value);
    } else if (parts.size() == 4 && parts[2] == "budget") {
      st->budgets[parts[3]] = r.u64(key);
    } else if (parts.size() == 4 && parts[2] == "weight") {
      st->weights[parts[3]] = r.real(key, 0.0, 1.0);
    } else {
      r.diags.push_back(key + ": unknown mix setting");
    }
  }
  for (auto& st : p.stages) {
    if (st.sources.empty()) {
      if (!st.budgets.empty() || !st.weights.empty() || st.total_tokens) {
        r.diags.push_back("mix." + st.name + ": budgets or weights given without sources");
      }
      st.automatic = true;
      continue;
    }
    std::set<std::string> src_names;
    for (const auto& [n, path] : st.sources) src_names.insert(n);
    for (const auto& [n, b] : st.budgets) {
      if (!src_names.contains(n)) r.diags.push_back("mix." + st.name + ".budget." + n + ": no such source");
    }
    for (const auto& [n, w] : st.weights) {
      if (!src_names.contains(n)) r.diags.push_back("mix." + st.name + ".weight." + n + ": no such source");
    }
    MixtureSpec spec;
    spec.stage = st.name;
    spec.total_tokens = st.total_tokens;
    for (const auto& [n, path] : st.sources) {
      MixtureEntry me{n, path, std::nullopt, std::nullopt};
      if (auto it = st.budgets.find(n); it != st.budgets.end()) me.budget = it->second;
      if (auto it = st.weights.find(n); it != st.weights.end()) me.weight = it->second;
      spec.entries.push_back(me);
    }
    r.guard("mix." + st.name, [&] { spec.validate(); });
  }

  // pack
  p.sequence_length = static_cast<std::uint32_t>(r.u64("pack.sequence_length", 2, 1u << 24));
  p.batch_size = static_cast<std::uint32_t>(r.u64("pack.batch_size", 1, 1u << 24));

  // probe / langid
  p.probe.n = r.u64("probe.n", 1, 1000000);
  p.probe.max_tokens = static_cast<std::uint32_t>(r.u64("probe.max_tokens", 1, 1u << 20));
  p.probe.temperature = r.real("probe.temperature", 0.0, 10.0);
  p.probe.prompt = r.str("probe.prompt");
  p.probe.max_in_flight = r.u64("probe.max_in_flight", 1, 4096);
  p.probe.seed = derive_seed(p.seed, "probe");
  p.probe.retry = p.translate.retry;
  p.detector.block_margin = r.real("probe.pair_margin", 0.0, 100.0);
  p.detector.min_block_chars = r.u64("probe.min_block_chars", 0, 100000);
  p.langid_threshold = r.real("langid.margin_threshold", 0.0, 100.0);
  p.langid_model = r.str("langid.model");
  if (!p.langid_model.empty() && !fs::is_regular_file(p.langid_model)) {
    r.diags.push_back("langid.model: file not found: " + p.langid_model.string());
  }
  for (Lang l : kTargetLanguages) {
    const std::string key = "langid.seed." + std::string(to_string(l));
    auto v = r.opt(key);
    if (!v || v->empty()) continue;
    if (p.langid_model.empty()) p.langid_seeds[l] = r.file(key);
    else p.langid_seeds[l] = *v;
  }

  r.check_unused();
  if (!r.diags.empty()) throw ConfigError(std::move(r.diags));
  return p;
}

LangIdModel PipelineConfig::load_langid() const {
  LangIdModel m = langid_model.empty() ? LangIdModel::train_files(langid_seeds, langid_threshold)
                                       : LangIdModel::load(langid_model);
  m.set_margin_threshold(langid_threshold);
  return m;
}

}  // namespace twp
