#include "twp/probe.hpp"

#include <cmath>
#include <future>

#include "twp/hash.hpp"
#include "twp/text.hpp"

namespace twp {

using nlohmann::ordered_json;

const std::vector<std::string>& default_language_names() {
  static const std::vector<std::string> names = {
      "English", "French", "German", "Spanish", "Italian", "Portuguese", "Dutch", "Polish", "Czech", "Slovak",
      "Slovenian", "Croatian", "Serbian", "Bosnian", "Bulgarian", "Romanian", "Hungarian", "Greek", "Swedish",
      "Danish", "Norwegian", "Finnish", "Estonian", "Latvian", "Lithuanian", "Irish", "Maltese", "Catalan",
      "Galician", "Basque", "Russian", "Ukrainian", "Turkish", "Arabic", "Hebrew", "Hindi", "Chinese", "Japanese",
      "Korean", "Vietnamese", "Indonesian", "Thai",
      // native names of the target languages
      "Français", "Deutsch", "Español", "Anglais", "Englisch", "Inglés"};
  return names;
}

ordered_json PairDetection::to_json() const {
  ordered_json j;
  j["is_pair"] = is_pair;
  j["rule"] = rule;
  j["evidence"] = evidence;
  return j;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    out.push_back(s.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

// Language name at the start of a line, followed by optional spaces and ':'.
std::string_view leading_language_name(std::string_view line, const std::vector<std::string>& names) {
  line = text::trim(line);
  for (const auto& n : names) {
    if (!line.starts_with(n)) continue;
    auto rest = line.substr(n.size());
    while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
    if (!rest.empty() && rest.front() == ':') return n;
  }
  return {};
}

std::string clip(std::string_view s, std::size_t n = 80) {
  if (s.size() <= n) return std::string(s);
  std::size_t cut = n;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return std::string(s.substr(0, cut)) + "...";
}

}  // namespace

PairDetection detect_translation_pair(std::string_view s, const LangIdModel& model, const PairDetectorConfig& cfg) {
  const auto& names = cfg.language_names.empty() ? default_language_names() : cfg.language_names;
  const auto lines = split_lines(s);

  // (a)
  std::string_view first_name;
  for (auto l : lines) {
    auto n = leading_language_name(l, names);
    if (n.empty()) continue;
    if (first_name.empty()) {
      first_name = n;
    } else if (n != first_name) {
      return {true, "a", std::string(first_name) + ":/" + std::string(n) + ":"};
    }
  }
  // (b)
  for (auto l : lines) {
    auto tab = l.find('\t');
    if (tab == std::string_view::npos) continue;
    auto left = model.classify(l.substr(0, tab));
    auto right = model.classify(l.substr(tab + 1));
    if (left.label != Lang::other && right.label != Lang::other && left.label != right.label) {
      return {true, "b",
              std::string(to_string(left.label)) + "\\t" + std::string(to_string(right.label)) + ": " + clip(l)};
    }
  }
  // (c)
  std::vector<std::pair<std::string_view, LangScore>> blocks;
  for (auto l : lines) {
    auto t = text::trim(l);
    if (t.empty()) continue;
    blocks.emplace_back(t, model.classify(t));
  }
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i) {
    const auto& [ta, a] = blocks[i];
    const auto& [tb, b] = blocks[i + 1];
    if (text::length(ta) < cfg.min_block_chars || text::length(tb) < cfg.min_block_chars) continue;
    if (a.label == Lang::other || b.label == Lang::other || a.label == b.label) continue;
    if (a.margin >= cfg.block_margin && b.margin >= cfg.block_margin) {
      return {true, "c", std::string(to_string(a.label)) + "/" + std::string(to_string(b.label)) + ": " + clip(ta)};
    }
  }
  return {};
}

double PriorReport::percentage(Lang l) const {
  if (obtained == 0) return 0.0;
  auto it = counts.find(l);
  return it == counts.end() ? 0.0 : 100.0 * static_cast<double>(it->second) / static_cast<double>(obtained);
}

double PriorReport::translation_pair_percentage() const {
  return obtained == 0 ? 0.0 : 100.0 * static_cast<double>(translation_pairs) / static_cast<double>(obtained);
}

ordered_json PriorReport::to_json() const {
  ordered_json j;
  j["requested"] = requested;
  j["obtained"] = obtained;
  j["params"] = {{"max_tokens", params.max_tokens},
                 {"temperature", params.temperature},
                 {"seed", params.seed},
                 {"prompt", params.prompt}};
  ordered_json pct;
  pct["en"] = percentage(Lang::en);
  pct["fr"] = percentage(Lang::fr);
  pct["de"] = percentage(Lang::de);
  pct["es"] = percentage(Lang::es);
  pct["others"] = percentage(Lang::other);
  j["percentages"] = pct;
  ordered_json cnt;
  for (Lang l : kAllLanguages) {
    auto it = counts.find(l);
    cnt[std::string(l == Lang::other ? "others" : to_string(l))] = it == counts.end() ? 0 : it->second;
  }
  j["counts"] = cnt;
  j["translation_pairs"] = translation_pairs;
  j["translation_pair_percentage"] = translation_pair_percentage();
  j["detector_version"] = kPairDetectorVersion;
  return j;
}

PriorReport probe_prior(Backend& backend, const LangIdModel& model, const ProbeParams& params,
                        const PairDetectorConfig& detector,
                        const std::function<void(const ordered_json&)>& evidence) {
  PriorReport rep;
  rep.requested = params.n;
  rep.params = params;
  for (Lang l : kAllLanguages) rep.counts[l] = 0;

  InFlightLimiter limiter(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, params.max_in_flight)));
  std::vector<std::future<CompletionResult>> futures;
  futures.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    CompletionRequest req;
    req.prompt = params.prompt;
    req.params = {params.max_tokens, params.temperature, derive_seed(params.seed, "probe/" + std::to_string(i))};
    futures.push_back(std::async(std::launch::async, [&, req = std::move(req)] {
      return complete_with_retry(backend, req, params.retry, &limiter);
    }));
  }
  for (std::size_t i = 0; i < futures.size(); ++i) {
    auto r = futures[i].get();
    ordered_json ev;
    ev["index"] = i;
    if (auto* f = std::get_if<BackendFailure>(&r)) {
      ev["status"] = "failed";
      ev["error"] = f->message;
      if (evidence) evidence(ev);
      continue;
    }
    const auto& text = std::get<std::string>(r);
    ++rep.obtained;
    auto sc = model.classify(text);
    ++rep.counts[sc.label];
    auto pair = detect_translation_pair(text, model, detector);
    if (pair.is_pair) ++rep.translation_pairs;
    ev["status"] = "ok";
    ev["label"] = to_string(sc.label);
    ev["margin"] = std::isfinite(sc.margin) ? ordered_json(sc.margin) : ordered_json(nullptr);
    ev["low_confidence"] = sc.low_confidence;
    ev["pair"] = pair.to_json();
    if (evidence) evidence(ev);
  }
  return rep;
}

}  // namespace twp
