#include "forge/gateway.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "forge/jsonl.hpp"
#include "forge/rng.hpp"

namespace forge {

uint64_t request_hash(const CompletionRequest& req) {
    // Canonical byte string: role\x1fcontent\x1e per message, then params.
    std::string buf;
    for (const auto& m : req.messages) {
        buf += role_name(m.role);
        buf += '\x1f';
        buf += m.content;
        buf += '\x1e';
    }
    char params[96];
    std::snprintf(params, sizeof(params), "t=%.6g;n=%d;m=", req.temperature, req.max_tokens);
    buf += params;
    buf += req.model_id;
    return fnv1a64(buf);
}

// ---------------------------------------------------------------------------
// Conversation grammar

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string rtrim_cr(std::string s) {
    while (!s.empty() && (s.back() == '\r')) s.pop_back();
    return s;
}

} // namespace

std::vector<QAPair> parse_conversation(const std::string& text) {
    // Blocks are separated by lines that are exactly "===".
    std::vector<std::string> blocks;
    {
        std::istringstream in(text);
        std::string line, cur;
        bool any = false;
        while (std::getline(in, line)) {
            line = rtrim_cr(line);
            if (line == "===") {
                blocks.push_back(cur);
                cur.clear();
                any = false;
            } else {
                if (any) cur += '\n';
                cur += line;
                any = true;
            }
        }
        if (!trim(cur).empty()) blocks.push_back(cur);
    }

    std::vector<QAPair> pairs;
    std::string pending_question;
    bool have_question = false;
    size_t index = 0;
    for (auto& raw : blocks) {
        std::string block = trim(raw);
        if (block.empty()) continue;
        bool is_q = block.rfind("Question:", 0) == 0;
        bool is_a = block.rfind("Answer:", 0) == 0;
        if (!is_q && !is_a)
            throw ParseError("conversation block " + std::to_string(index) +
                             ": expected 'Question:' or 'Answer:' label");
        std::string body = trim(block.substr(is_q ? 9 : 7));
        if (is_q) {
            if (have_question)
                throw ParseError("conversation block " + std::to_string(index) +
                                 ": question without a preceding answer");
            if (body.empty())
                throw ParseError("conversation block " + std::to_string(index) +
                                 ": empty question");
            pending_question = body;
            have_question = true;
        } else {
            if (!have_question)
                throw ParseError("conversation block " + std::to_string(index) +
                                 ": answer without a preceding question");
            if (body.empty())
                throw ParseError("conversation block " + std::to_string(index) +
                                 ": empty answer");
            pairs.push_back({pending_question, body});
            have_question = false;
        }
        ++index;
    }
    if (have_question)
        throw ParseError("conversation: dangling question at block " + std::to_string(index - 1));
    if (pairs.empty() && !trim(text).empty())
        throw ParseError("conversation: no Question/Answer pairs found in nonempty text");
    return pairs;
}

std::string format_conversation(std::span<const QAPair> pairs) {
    std::string out;
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (i) out += "===\n";
        out += "Question:\n" + pairs[i].question + "\n===\nAnswer:\n" + pairs[i].answer + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mock backend

void MockBackend::set_response(const CompletionRequest& req, std::string text) {
    set_response(request_hash(req), std::move(text));
}

void MockBackend::set_response(uint64_t hash, std::string text) {
    std::lock_guard lock(mu_);
    canned_[hash] = std::move(text);
}

void MockBackend::set_handler(Handler h) {
    std::lock_guard lock(mu_);
    handler_ = std::move(h);
}

void MockBackend::fail_next(int n, bool permanent) {
    std::lock_guard lock(mu_);
    pending_failures_ = n;
    fail_permanent_ = permanent;
}

CompletionResult MockBackend::send(const CompletionRequest& req) {
    calls_.fetch_add(1);
    int cur = in_flight_.fetch_add(1) + 1;
    int seen = max_in_flight_.load();
    while (cur > seen && !max_in_flight_.compare_exchange_weak(seen, cur)) {}
    struct Exit {
        std::atomic<int>& n;
        ~Exit() { n.fetch_sub(1); }
    } exit_guard{in_flight_};

    std::string text;
    {
        std::lock_guard lock(mu_);
        if (pending_failures_ > 0) {
            --pending_failures_;
            if (fail_permanent_) throw PermanentBackendError("mock: scripted permanent failure");
            throw TransientBackendError("mock: scripted transient failure");
        }
        auto it = canned_.find(request_hash(req));
        if (it != canned_.end()) {
            text = it->second;
        } else if (handler_) {
            text = handler_(req);
        } else {
            throw PermanentBackendError("mock: no canned response for request");
        }
    }
    return {std::move(text), id(), 0, 1};
}

// ---------------------------------------------------------------------------
// HTTP backend

namespace {
std::atomic<int64_t> g_connection_attempts{0};
}

int64_t HttpBackend::connection_attempts() { return g_connection_attempts.load(); }

HttpBackend::HttpBackend(std::string base_url, std::string api_key, std::string model_id)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)),
      model_id_(std::move(model_id)) {}

CompletionResult HttpBackend::send(const CompletionRequest& req) {
    g_connection_attempts.fetch_add(1);

    nlohmann::json body;
    body["model"] = req.model_id.empty() ? model_id_ : req.model_id;
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    auto& msgs = body["messages"] = nlohmann::json::array();
    for (const auto& m : req.messages)
        msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});

    // Split base_url into scheme://host and path prefix.
    std::string url = base_url_;
    std::string path_prefix;
    size_t scheme = url.find("://");
    size_t slash = scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
    if (slash != std::string::npos) {
        path_prefix = url.substr(slash);
        url = url.substr(0, slash);
    }
    if (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();

    httplib::Client client(url);
    client.set_connection_timeout(15);
    client.set_read_timeout(120);
    httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

    auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path_prefix + "/chat/completions", headers, body.dump(),
                           "application/json");
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();

    if (!res) throw TransientBackendError("http: connection failure to " + url);
    if (res->status == 429 || res->status >= 500)
        throw TransientBackendError("http: status " + std::to_string(res->status));
    if (res->status >= 400)
        throw PermanentBackendError("http: status " + std::to_string(res->status) + ": " +
                                    res->body);

    try {
        auto j = nlohmann::json::parse(res->body);
        std::string text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        return {std::move(text), id(), elapsed, 1};
    } catch (const nlohmann::json::exception& e) {
        throw PermanentBackendError(std::string("http: malformed completion body: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions opts)
    : backend_(std::move(backend)), opts_(std::move(opts)) {
    if (!opts_.now_ms)
        opts_.now_ms = [] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now().time_since_epoch())
                .count();
        };
    if (!opts_.sleep_ms)
        opts_.sleep_ms = [](int64_t ms) {
            std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        };
    tokens_ = opts_.bucket_capacity;
    last_refill_ms_ = opts_.now_ms();
}

bool Gateway::try_cache(uint64_t hash, CompletionResult& out) {
    if (opts_.cache_dir.empty()) return false;
    auto path = opts_.cache_dir / (std::to_string(hash) + ".json");
    std::ifstream in(path);
    if (!in) return false;
    try {
        auto j = nlohmann::json::parse(in);
        out.text = j.at("text").get<std::string>();
        out.backend_id = "cache";
        out.latency_ms = 0;
        out.attempt_count = 1;
        return true;
    } catch (const nlohmann::json::exception&) {
        return false; // corrupt entry: fall through to the backend
    }
}

void Gateway::store_cache(uint64_t hash, const CompletionResult& res) {
    if (opts_.cache_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(opts_.cache_dir, ec);
    auto path = opts_.cache_dir / (std::to_string(hash) + ".json");
    std::ofstream out(path);
    out << nlohmann::json{{"text", res.text}, {"backend_id", res.backend_id}}.dump() << '\n';
}

void Gateway::acquire_rate_token() {
    const int64_t deadline = opts_.now_ms() + opts_.rate_wait_deadline_ms;
    std::unique_lock lock(rate_mu_);
    for (;;) {
        int64_t now = opts_.now_ms();
        double refill = (now - last_refill_ms_) / 1000.0 * opts_.rate_per_sec;
        if (refill > 0) {
            tokens_ = std::min(opts_.bucket_capacity, tokens_ + refill);
            last_refill_ms_ = now;
        }
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        if (now >= deadline)
            throw TransportError("rate limit wait exceeded deadline");
        double need = (1.0 - tokens_) / opts_.rate_per_sec * 1000.0;
        int64_t wait = std::max<int64_t>(1, static_cast<int64_t>(need) + 1);
        lock.unlock();
        opts_.sleep_ms(std::min(wait, deadline - now));
        lock.lock();
    }
}

CompletionResult Gateway::complete(const CompletionRequest& req) {
    const uint64_t hash = request_hash(req);
    CompletionResult cached;
    if (try_cache(hash, cached)) {
        cache_hits_.fetch_add(1);
        return cached;
    }

    // Bounded in-flight count.
    {
        std::unique_lock lock(flight_mu_);
        flight_cv_.wait(lock, [&] { return in_flight_ < opts_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        Gateway& g;
        ~Release() {
            std::lock_guard lock(g.flight_mu_);
            --g.in_flight_;
            g.flight_cv_.notify_one();
        }
    } release{*this};

    std::string last_error;
    for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
        acquire_rate_token();
        try {
            network_calls_.fetch_add(1);
            CompletionResult res = backend_->send(req);
            res.attempt_count = attempt;
            store_cache(hash, res);
            return res;
        } catch (const TransientBackendError& e) {
            last_error = e.what();
            if (attempt < opts_.max_attempts)
                opts_.sleep_ms(opts_.backoff_base_ms << (attempt - 1));
        }
        // PermanentBackendError propagates to the caller with no retry.
    }
    throw TransportError("retries exhausted (" + std::to_string(opts_.max_attempts) +
                         " attempts): " + last_error);
}

} // namespace forge
