#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <variant>
#include <vector>

namespace twp {

struct GenerationParams {
  std::uint32_t max_tokens = 600;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
};

struct CompletionRequest {
  std::string prompt;
  // The chunk embedded in the prompt. Mocks act on it; HTTP ignores it.
  std::string source_text;
  GenerationParams params;
};

struct BackendFailure {
  enum class Kind { transient, permanent };
  Kind kind = Kind::transient;
  std::string message;
};

using CompletionResult = std::variant<std::string, BackendFailure>;

// complete() must be total (never throws for backend-side problems) and safe
// to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual std::string describe() const = 0;
};

// Returns the source text unchanged.
class MockEchoBackend final : public Backend {
 public:
  CompletionResult complete(const CompletionRequest& request) override { return request.source_text; }
  std::string describe() const override { return "mock-echo"; }
};

// ROT13 over ASCII letters: reversible, leaves punctuation and layout intact.
class MockCipherBackend final : public Backend {
 public:
  static std::string encode(std::string_view s);
  static std::string decode(std::string_view s) { return encode(s); }
  CompletionResult complete(const CompletionRequest& request) override { return encode(request.source_text); }
  std::string describe() const override { return "mock-cipher"; }
};

// Cycles through fixed texts: the i-th call overall returns texts[i % n].
class MockFixtureBackend final : public Backend {
 public:
  explicit MockFixtureBackend(std::vector<std::string> texts);
  CompletionResult complete(const CompletionRequest& request) override;
  std::string describe() const override { return "mock-fixture"; }

 private:
  std::vector<std::string> texts_;
  std::atomic<std::uint64_t> next_{0};
};

// Decorator for tests: fails when the source text contains a marker, and/or
// sleeps before every call.
class FaultInjectingBackend final : public Backend {
 public:
  FaultInjectingBackend(std::unique_ptr<Backend> inner, std::string fail_on,
                        BackendFailure::Kind kind, std::chrono::milliseconds delay);
  CompletionResult complete(const CompletionRequest& request) override;
  std::string describe() const override;
  std::uint64_t calls() const { return calls_; }

 private:
  std::unique_ptr<Backend> inner_;
  std::string fail_on_;
  BackendFailure::Kind kind_;
  std::chrono::milliseconds delay_;
  std::atomic<std::uint64_t> calls_{0};
};

struct HttpBackendConfig {
  std::string endpoint;  // http://host:port/v1/completions
  std::string model;
  std::string response_path = "choices.0.text";
  std::chrono::seconds timeout{120};
};

// OpenAI-compatible completions client. 5xx, 429 and transport errors are
// transient; other non-2xx statuses and unparsable bodies are permanent.
class HttpCompletionBackend final : public Backend {
 public:
  explicit HttpCompletionBackend(HttpBackendConfig config);
  CompletionResult complete(const CompletionRequest& request) override;
  std::string describe() const override;

 private:
  HttpBackendConfig config_;
  std::string host_;
  std::string path_;
};

// Looks up a dotted path ("choices.0.text") in a JSON document; numeric
// segments index arrays. Returns nullopt if absent or not a string.
std::optional<std::string> extract_json_path(std::string_view body, std::string_view path);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

// Bounds the number of concurrent backend calls.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::ptrdiff_t limit) : sem_(limit) {}
  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<4096> sem_;
};

// Calls the backend up to policy.attempts times, sleeping with exponential
// backoff between transient failures. Permanent failures are not retried.
CompletionResult complete_with_retry(Backend& backend, const CompletionRequest& request,
                                     const RetryPolicy& policy, InFlightLimiter* limiter = nullptr);

struct BackendConfig {
  std::string kind = "mock-echo";  // mock-echo | mock-cipher | mock-fixture | http
  HttpBackendConfig http;
  std::vector<std::string> fixture_texts;
  std::string fail_on;  // fault injection marker, empty = off
  bool fail_permanent = false;
  std::chrono::milliseconds delay{0};
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace twp
