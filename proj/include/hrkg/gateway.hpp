#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hrkg/errors.hpp"

namespace hrkg {

// One chat/embedding endpoint role. The paper's pipeline runs three of
// these: an extractor, a corrector, and an embedder.
struct EndpointConfig {
    std::string base_url = "http://localhost:11434/v1";
    std::string model;
    std::string api_key_env = "HRKG_API_KEY";
    double timeout_s = 60.0;
    int max_retries = 3; // additional attempts after the first
    double temperature = 0.0;
    int max_output_tokens = 1024;
    std::optional<std::int64_t> request_seed = 0;
    int batch_size = 16; // embedding batch split
    bool mock = false;
};

struct ChatRequest {
    EndpointConfig config;
    std::string system;
    std::string user;
};

// Cache key: SHA-256 over a length-prefixed layout of exactly
// (model, temperature, max tokens, seed, system, user) — documented in
// docs/formats.md. Changing any keyed field changes the key.
std::string chat_cache_key(const ChatRequest& request);

struct HttpResult {
    bool transport_ok = false; // false: connect/timeout failure, status meaningless
    int status = 0;
    std::string body;
    std::string error;
};

// Minimal POST-JSON transport so retry/backoff logic is testable offline.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResult post_json(const std::string& base_url, const std::string& path,
                                 const std::string& body, const std::string& api_key,
                                 double timeout_s) = 0;
};

// cpp-httplib based implementation for OpenAI-compatible endpoints.
class HttpTransport : public Transport {
public:
    HttpResult post_json(const std::string& base_url, const std::string& path,
                         const std::string& body, const std::string& api_key,
                         double timeout_s) override;
};

// Replays a fixed result sequence; used by retry tests.
class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::deque<HttpResult> script) : script_(std::move(script)) {}

    HttpResult post_json(const std::string&, const std::string&, const std::string&,
                         const std::string&, double) override;

    int calls() const { return calls_; }

private:
    std::mutex mutex_;
    std::deque<HttpResult> script_;
    int calls_ = 0;
};

// Offline fixtures: digest -> response text, plus a script consumed
// sequentially when a digest has no mapping.
struct MockFixtures {
    std::unordered_map<std::string, std::string> responses;
    std::deque<std::string> script;

    static MockFixtures load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

constexpr std::size_t kStubEmbedDim = 256;

// Deterministic offline embedder: lowercase, split on whitespace runs,
// FNV-1a 64-bit token hash mod 256, counts L2-normalized. Text with no
// tokens maps to the all-zero (degenerate) vector.
std::vector<double> stub_embed(std::string_view text);

// Dot product of unit vectors; 0.0 when either side is degenerate (all-zero).
double cosine(std::span<const double> a, std::span<const double> b);

struct RetryPolicy {
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
};

// Uniform client for chat-completion and embedding calls with retries, a
// persistent one-file-per-entry response cache, and a deterministic mock
// mode. Safe to call from multiple workers; cache writes are serialized and
// at most `max_inflight` transport calls run concurrently.
class LlmGateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit LlmGateway(std::optional<std::filesystem::path> cache_dir = std::nullopt,
                        std::shared_ptr<Transport> transport = nullptr,
                        Sleeper sleeper = nullptr, int max_inflight = 4);
    ~LlmGateway();

    void set_mock_fixtures(std::shared_ptr<MockFixtures> fixtures);

    // Fills fixture misses in mock mode and records the synthesized pair;
    // only the fixture generator uses this.
    using MockRecorder = std::function<std::string(const ChatRequest&, const std::string& digest)>;
    void set_mock_recorder(MockRecorder recorder);
    const std::unordered_map<std::string, std::string>& recorded_responses() const {
        return recorded_;
    }

    // Returns assistant text. Cache hit -> no transport call; live responses
    // are written to the cache before returning. 5xx/429/connect failures
    // retry with exponential backoff (base 1s, factor 2, jitter); other 4xx
    // fail immediately; empty assistant text raises EmptyResponseError.
    std::string chat(const ChatRequest& request);

    // One unit vector per text, order preserved, L2-normalized regardless of
    // backend normalization, batched at config.batch_size. Mock mode uses
    // stub_embed. Dimension mismatch across a batch raises TransportError.
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                           const EndpointConfig& config);

    // Logical chat invocations (cache hits included) vs actual HTTP posts.
    std::int64_t chat_calls() const;
    std::int64_t network_calls() const;

private:
    std::string transport_chat(const ChatRequest& request);
    std::optional<std::string> cache_lookup(const std::string& key);
    void cache_store(const std::string& key, const ChatRequest& request,
                     const std::string& response);

    std::optional<std::filesystem::path> cache_dir_;
    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    std::shared_ptr<MockFixtures> fixtures_;
    MockRecorder recorder_;
    std::unordered_map<std::string, std::string> recorded_;
    RetryPolicy retry_;

    mutable std::mutex mutex_; // cache + fixtures + counters
    std::unique_ptr<class InflightGate> gate_;
    std::int64_t chat_calls_ = 0;
    std::int64_t network_calls_ = 0;
};

} // namespace hrkg
