#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "forge/errors.hpp"
#include "forge/prompt.hpp"

namespace forge {

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string model_id;
};

struct CompletionResult {
    std::string text;
    std::string backend_id;
    int64_t latency_ms = 0;
    int attempt_count = 1;
};

// Stable hash of the full request; keys the mock replay map and the disk
// cache, so identical prompts are byte-exact replays.
uint64_t request_hash(const CompletionRequest& req);

struct QAPair {
    std::string question;
    std::string answer;

    bool operator==(const QAPair&) const = default;
};

// Parses alternating "Question:" / "Answer:" blocks separated by lines
// containing exactly "===". Throws ParseError on a dangling question or
// when nonempty text yields zero pairs.
std::vector<QAPair> parse_conversation(const std::string& text);

// Inverse of parse_conversation (modulo surrounding whitespace).
std::string format_conversation(std::span<const QAPair> pairs);

// Retryable failure (connection error, HTTP 429/5xx).
class TransientBackendError : public Error {
public:
    using Error::Error;
};
// Non-retryable failure (other HTTP 4xx, bad request).
class PermanentBackendError : public Error {
public:
    using Error::Error;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResult send(const CompletionRequest& req) = 0;
    virtual std::string id() const = 0;
};

// Offline deterministic backend. Responses come from an explicit replay
// map (request hash -> text) or a fallback handler. Tracks concurrent
// entries so tests can assert the gateway's in-flight bound.
class MockBackend : public Backend {
public:
    using Handler = std::function<std::string(const CompletionRequest&)>;

    void set_response(const CompletionRequest& req, std::string text);
    void set_response(uint64_t hash, std::string text);
    void set_handler(Handler h);
    // The next n calls throw (transient or permanent), then behave normally.
    void fail_next(int n, bool permanent = false);

    CompletionResult send(const CompletionRequest& req) override;
    std::string id() const override { return "mock"; }

    int call_count() const { return calls_.load(); }
    int max_concurrent_observed() const { return max_in_flight_.load(); }

private:
    std::mutex mu_;
    std::unordered_map<uint64_t, std::string> canned_;
    Handler handler_;
    int pending_failures_ = 0;
    bool fail_permanent_ = false;
    std::atomic<int> calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

// Chat-completions HTTP backend: POST {base_url}/chat/completions with
// {model, messages, temperature, max_tokens}; reads
// choices[0].message.content. API key sent as a bearer token.
class HttpBackend : public Backend {
public:
    HttpBackend(std::string base_url, std::string api_key, std::string model_id);
    CompletionResult send(const CompletionRequest& req) override;
    std::string id() const override { return "api:" + model_id_; }

    // Process-wide count of connection attempts; the offline test suite
    // asserts this stays at zero under --backend mock.
    static int64_t connection_attempts();

private:
    std::string base_url_;
    std::string api_key_;
    std::string model_id_;
};

struct GatewayOptions {
    int max_attempts = 4;
    int64_t backoff_base_ms = 250; // doubled per retry
    double rate_per_sec = 5.0;     // token-bucket refill
    double bucket_capacity = 10.0;
    int max_in_flight = 8;
    int64_t rate_wait_deadline_ms = 60'000;
    std::filesystem::path cache_dir; // empty disables the disk cache

    // Injectable clock for tests; defaults to steady_clock / thread sleep.
    std::function<int64_t()> now_ms;
    std::function<void(int64_t)> sleep_ms;
};

// Shared front door to any backend: disk cache, token-bucket rate limit,
// bounded in-flight requests, exponential-backoff retries. Thread-safe.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayOptions opts = {});

    // Throws TransportError when retries are exhausted or the rate-limit
    // wait exceeds its deadline; PermanentBackendError passes through.
    CompletionResult complete(const CompletionRequest& req);

    int64_t cache_hits() const { return cache_hits_.load(); }
    int64_t network_calls() const { return network_calls_.load(); }

private:
    bool try_cache(uint64_t hash, CompletionResult& out);
    void store_cache(uint64_t hash, const CompletionResult& res);
    void acquire_rate_token();

    std::shared_ptr<Backend> backend_;
    GatewayOptions opts_;

    std::mutex rate_mu_;
    double tokens_;
    int64_t last_refill_ms_;

    std::mutex flight_mu_;
    std::condition_variable flight_cv_;
    int in_flight_ = 0;

    std::atomic<int64_t> cache_hits_{0};
    std::atomic<int64_t> network_calls_{0};
};

} // namespace forge
