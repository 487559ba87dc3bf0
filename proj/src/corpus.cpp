#include "twp/corpus.hpp"

#include <cmath>

#include "twp/error.hpp"
#include "twp/text.hpp"
#include "twp/tokenizer.hpp"

namespace twp {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Lang lang) {
  switch (lang) {
    case Lang::en: return "en";
    case Lang::fr: return "fr";
    case Lang::de: return "de";
    case Lang::es: return "es";
    case Lang::other: return "other";
  }
  return "other";
}

std::optional<Lang> parse_lang(std::string_view tag) {
  for (Lang l : kAllLanguages) {
    if (to_string(l) == tag) return l;
  }
  return std::nullopt;
}

std::string_view language_name(Lang lang) {
  switch (lang) {
    case Lang::en: return "English";
    case Lang::fr: return "French";
    case Lang::de: return "German";
    case Lang::es: return "Spanish";
    case Lang::other: return "Other";
  }
  return "Other";
}

ordered_json to_json(const Document& doc) {
  ordered_json j;
  j["id"] = doc.id;
  j["lang"] = to_string(doc.lang);
  j["text"] = doc.text;
  if (doc.source) j["source"] = *doc.source;
  if (doc.token_count) j["token_count"] = *doc.token_count;
  return j;
}

Document document_from_json(const json& j) {
  if (!j.is_object()) throw DataError("line is not a JSON object");
  auto str_field = [&](const char* name) -> std::string {
    auto it = j.find(name);
    if (it == j.end()) throw DataError(std::string("missing field '") + name + "'");
    if (!it->is_string()) throw DataError(std::string("field '") + name + "' is not a string");
    return it->get<std::string>();
  };
  Document doc;
  doc.id = str_field("id");
  if (doc.id.empty()) throw DataError("empty id");
  auto tag = str_field("lang");
  auto lang = parse_lang(tag);
  if (!lang) throw DataError("unknown language tag '" + tag + "'");
  doc.lang = *lang;
  doc.text = str_field("text");
  if (!text::valid_utf8(doc.text)) throw DataError("text is not valid UTF-8");
  if (auto it = j.find("source"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError("field 'source' is not a string");
    doc.source = it->get<std::string>();
  }
  if (auto it = j.find("token_count"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) throw DataError("field 'token_count' is not a non-negative integer");
    doc.token_count = it->get<std::uint64_t>();
  }
  return doc;
}

CorpusReader::CorpusReader(const std::filesystem::path& path, ReadMode mode)
    : path_(path), mode_(mode), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open corpus " + path.string());
  std::string first;
  std::uint64_t first_offset = offset_;
  if (!read_line(first)) return;
  // A header is only recognised on the first line.
  json j = json::parse(first, nullptr, false);
  if (!j.is_discarded() && j.is_object() && j.value("_header", false)) {
    CorpusHeader h;
    if (auto it = j.find("tokenizer_fingerprint"); it != j.end() && it->is_string()) {
      h.tokenizer_fingerprint = it->get<std::string>();
    }
    header_ = std::move(h);
    return;
  }
  pending_ = std::move(first);
  pending_offset_ = first_offset;
  pending_line_no_ = line_no_;
}

bool CorpusReader::read_line(std::string& line) {
  if (!std::getline(in_, line)) return false;
  ++line_no_;
  offset_ += line.size() + (in_.eof() ? 0 : 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::optional<Document> CorpusReader::next() {
  std::string line;
  while (true) {
    std::uint64_t offset;
    std::uint64_t line_no;
    if (pending_) {
      line = std::move(*pending_);
      pending_.reset();
      offset = pending_offset_;
      line_no = pending_line_no_;
    } else {
      offset = offset_;
      if (!read_line(line)) return std::nullopt;
      line_no = line_no_;
    }
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      Document doc = document_from_json(j);
      last_offset_ = offset;
      return doc;
    } catch (const std::exception& e) {
      std::string msg = e.what();
      if (mode_ == ReadMode::strict) {
        throw DataError(path_.string() + ":" + std::to_string(line_no) + ": " + msg);
      }
      errors_.push_back({line_no, msg});
    }
  }
}

Document read_document_at(std::ifstream& in, std::uint64_t offset) {
  in.clear();
  in.seekg(static_cast<std::streamoff>(offset));
  std::string line;
  if (!std::getline(in, line)) throw IoError("cannot read document at offset " + std::to_string(offset));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return document_from_json(json::parse(line));
}

std::vector<Document> read_all(const std::filesystem::path& path, ReadMode mode) {
  CorpusReader reader(path, mode);
  std::vector<Document> docs;
  while (auto d = reader.next()) docs.push_back(std::move(*d));
  return docs;
}

CorpusWriter::CorpusWriter(const std::filesystem::path& path, std::optional<CorpusHeader> header,
                           bool append)
    : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  if (append) bytes_ = std::filesystem::file_size(path);
  if (header && !append) {
    ordered_json h;
    h["_header"] = true;
    h["tokenizer_fingerprint"] = header->tokenizer_fingerprint;
    put_line(h.dump());
  }
}

void CorpusWriter::put_line(const std::string& line) {
  out_ << line << '\n';
  if (!out_) throw IoError("write failed on " + path_.string());
  bytes_ += line.size() + 1;
}

void CorpusWriter::write(const Document& doc) {
  put_line(to_json(doc).dump());
  ++written_;
}

void CorpusWriter::write_json(const ordered_json& record) { put_line(record.dump()); }

void CorpusWriter::flush() {
  out_.flush();
  if (!out_) throw IoError("flush failed on " + path_.string());
}

void write_all(const std::filesystem::path& path, std::span<const Document> docs,
               std::optional<CorpusHeader> header) {
  CorpusWriter w(path, std::move(header));
  for (const auto& d : docs) w.write(d);
  w.flush();
}

std::uint64_t effective_token_count(const Document& doc, const TokenCounter& counter, bool cache_valid) {
  if (cache_valid && doc.token_count) return *doc.token_count;
  return counter.count(doc.text);
}

LanguageStats CorpusStats::overall() const {
  LanguageStats total;
  for (const auto& [lang, s] : per_language) {
    total.token_total += s.token_total;
    total.doc_count += s.doc_count;
  }
  return total;
}

ordered_json CorpusStats::to_json() const {
  auto row = [](std::string_view name, std::string_view tag, const LanguageStats& s) {
    ordered_json r;
    r["language"] = name;
    if (!tag.empty()) r["lang"] = tag;
    r["tokens"] = s.token_total;
    r["avg_doc_length"] = s.avg_doc_length();
    r["doc_count"] = s.doc_count;
    return r;
  };
  ordered_json j;
  j["tokenizer_fingerprint"] = tokenizer_fingerprint;
  j["languages"] = ordered_json::array();
  for (const auto& [lang, s] : per_language) j["languages"].push_back(row(language_name(lang), to_string(lang), s));
  j["total"] = row("Total", "", overall());
  return j;
}

void StatsAccumulator::add(Lang lang, std::uint64_t tokens) {
  auto& s = stats_.per_language[lang];
  s.token_total += tokens;
  s.doc_count += 1;
}

CorpusStats compute_stats(std::span<const Document> docs, const TokenCounter& counter) {
  StatsAccumulator acc(counter.fingerprint());
  for (const auto& d : docs) acc.add(d.lang, counter.count(d.text));
  return acc.stats();
}

CorpusStats compute_stats(CorpusReader& reader, const TokenCounter& counter) {
  StatsAccumulator acc(counter.fingerprint());
  const bool cache = reader.cache_valid_for(counter.fingerprint());
  while (auto d = reader.next()) acc.add(d->lang, effective_token_count(*d, counter, cache));
  return acc.stats();
}

double implied_doc_count(double token_total, double avg_doc_length) {
  if (avg_doc_length <= 0.0) throw DataError("average document length must be positive");
  return token_total / avg_doc_length;
}

bool stats_row_consistent(double token_total, double avg_doc_length, double doc_count) {
  return std::fabs(avg_doc_length * doc_count - token_total) <= 0.5 * doc_count;
}

}  // namespace twp
