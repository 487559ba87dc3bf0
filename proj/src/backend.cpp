#include "twp/backend.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "twp/error.hpp"

namespace twp {

std::string MockCipherBackend::encode(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>('a' + (c - 'a' + 13) % 26);
    else if (c >= 'A' && c <= 'Z') c = static_cast<char>('A' + (c - 'A' + 13) % 26);
  }
  return out;
}

MockFixtureBackend::MockFixtureBackend(std::vector<std::string> texts) : texts_(std::move(texts)) {
  if (texts_.empty()) throw ConfigError("mock-fixture backend needs at least one text");
}

CompletionResult MockFixtureBackend::complete(const CompletionRequest&) {
  return texts_[next_.fetch_add(1) % texts_.size()];
}

FaultInjectingBackend::FaultInjectingBackend(std::unique_ptr<Backend> inner, std::string fail_on,
                                             BackendFailure::Kind kind, std::chrono::milliseconds delay)
    : inner_(std::move(inner)), fail_on_(std::move(fail_on)), kind_(kind), delay_(delay) {}

CompletionResult FaultInjectingBackend::complete(const CompletionRequest& request) {
  ++calls_;
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  if (!fail_on_.empty() && request.source_text.find(fail_on_) != std::string::npos) {
    return BackendFailure{kind_, "injected failure"};
  }
  return inner_->complete(request);
}

std::string FaultInjectingBackend::describe() const {
  std::string d = inner_->describe();
  if (!fail_on_.empty()) d += "+fail_on";
  if (delay_.count() > 0) d += "+delay";
  return d;
}

HttpCompletionBackend::HttpCompletionBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  if (!url.starts_with("http://")) {
    throw ConfigError("backend.endpoint must be an http:// URL, got '" + url + "'");
  }
  auto slash = url.find('/', 7);
  host_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/completions" : url.substr(slash);
  if (host_.size() <= 7) throw ConfigError("backend.endpoint has no host: '" + url + "'");
}

std::string HttpCompletionBackend::describe() const { return "http " + config_.endpoint + " model=" + config_.model; }

CompletionResult HttpCompletionBackend::complete(const CompletionRequest& request) {
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["prompt"] = request.prompt;
  body["max_tokens"] = request.params.max_tokens;
  body["temperature"] = request.params.temperature;
  if (request.params.seed) body["seed"] = *request.params.seed;

  // httplib clients are not shareable across threads; one per call is cheap
  // next to a generation.
  httplib::Client client(host_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    return BackendFailure{BackendFailure::Kind::transient, "transport error: " + httplib::to_string(res.error())};
  }
  if (res->status == 429 || res->status >= 500) {
    return BackendFailure{BackendFailure::Kind::transient, "HTTP " + std::to_string(res->status)};
  }
  if (res->status < 200 || res->status >= 300) {
    return BackendFailure{BackendFailure::Kind::permanent, "HTTP " + std::to_string(res->status)};
  }
  auto text = extract_json_path(res->body, config_.response_path);
  if (!text) {
    return BackendFailure{BackendFailure::Kind::permanent, "response has no string at '" + config_.response_path + "'"};
  }
  return *text;
}

std::optional<std::string> extract_json_path(std::string_view body, std::string_view path) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  const nlohmann::json* cur = &j;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto dot = path.find('.', pos);
    auto seg = path.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
    if (cur->is_array()) {
      std::size_t idx = 0;
      if (seg.empty()) return std::nullopt;
      for (char c : seg) {
        if (c < '0' || c > '9') return std::nullopt;
        idx = idx * 10 + static_cast<std::size_t>(c - '0');
      }
      if (idx >= cur->size()) return std::nullopt;
      cur = &(*cur)[idx];
    } else if (cur->is_object()) {
      auto it = cur->find(std::string(seg));
      if (it == cur->end()) return std::nullopt;
      cur = &*it;
    } else {
      return std::nullopt;
    }
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  if (!cur->is_string()) return std::nullopt;
  return cur->get<std::string>();
}

CompletionResult complete_with_retry(Backend& backend, const CompletionRequest& request,
                                     const RetryPolicy& policy, InFlightLimiter* limiter) {
  auto backoff = policy.initial_backoff;
  CompletionResult last = BackendFailure{BackendFailure::Kind::permanent, "no attempts configured"};
  for (int attempt = 0; attempt < policy.attempts; ++attempt) {
    if (attempt > 0 && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
    if (limiter) limiter->acquire();
    try {
      last = backend.complete(request);
    } catch (const std::exception& e) {
      last = BackendFailure{BackendFailure::Kind::transient, e.what()};
    }
    if (limiter) limiter->release();
    if (std::holds_alternative<std::string>(last)) return last;
    auto& f = std::get<BackendFailure>(last);
    if (f.kind == BackendFailure::Kind::permanent) return last;
    f.message = "attempt " + std::to_string(attempt + 1) + "/" + std::to_string(policy.attempts) + ": " + f.message;
  }
  return last;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  std::unique_ptr<Backend> b;
  if (config.kind == "mock-echo") b = std::make_unique<MockEchoBackend>();
  else if (config.kind == "mock-cipher") b = std::make_unique<MockCipherBackend>();
  else if (config.kind == "mock-fixture") b = std::make_unique<MockFixtureBackend>(config.fixture_texts);
  else if (config.kind == "http") b = std::make_unique<HttpCompletionBackend>(config.http);
  else throw ConfigError("backend.kind: unknown backend '" + config.kind + "'");
  if (!config.fail_on.empty() || config.delay.count() > 0) {
    b = std::make_unique<FaultInjectingBackend>(
        std::move(b), config.fail_on,
        config.fail_permanent ? BackendFailure::Kind::permanent : BackendFailure::Kind::transient, config.delay);
  }
  return b;
}

}  // namespace twp
