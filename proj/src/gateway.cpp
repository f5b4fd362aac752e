#include "hrkg/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::json;
using nlohmann::ordered_json;

std::string chat_cache_key(const ChatRequest& request) {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6f", request.config.temperature);
    std::string material = "hrkg-cache-v1\n";
    material += "model " + request.config.model + "\n";
    material += "temperature " + std::string(temp) + "\n";
    material += "max_tokens " + std::to_string(request.config.max_output_tokens) + "\n";
    material += "seed ";
    material += request.config.request_seed ? std::to_string(*request.config.request_seed)
                                            : std::string("none");
    material += "\n";
    material += "system " + std::to_string(request.system.size()) + "\n" + request.system + "\n";
    material += "user " + std::to_string(request.user.size()) + "\n" + request.user + "\n";
    return text::sha256_hex(material);
}

HttpResult HttpTransport::post_json(const std::string& base_url, const std::string& path,
                                    const std::string& body, const std::string& api_key,
                                    double timeout_s) {
    // base_url may carry a path prefix ("http://host:11434/v1").
    std::string origin = base_url;
    std::string prefix;
    size_t scheme = origin.find("://");
    if (scheme != std::string::npos) {
        size_t slash = origin.find('/', scheme + 3);
        if (slash != std::string::npos) {
            prefix = origin.substr(slash);
            origin = origin.substr(0, slash);
        }
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::milliseconds(static_cast<int>(timeout_s * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(static_cast<int>(timeout_s * 1000)));
    client.set_write_timeout(std::chrono::milliseconds(static_cast<int>(timeout_s * 1000)));
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    auto res = client.Post(prefix + path, headers, body, "application/json");
    HttpResult out;
    if (!res) {
        out.transport_ok = false;
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.transport_ok = true;
    out.status = res->status;
    out.body = res->body;
    return out;
}

HttpResult ScriptedTransport::post_json(const std::string&, const std::string&,
                                        const std::string&, const std::string&, double) {
    std::lock_guard lock(mutex_);
    ++calls_;
    if (script_.empty()) {
        HttpResult r;
        r.transport_ok = false;
        r.error = "scripted transport exhausted";
        return r;
    }
    HttpResult r = std::move(script_.front());
    script_.pop_front();
    return r;
}

MockFixtures MockFixtures::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open mock fixtures file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": invalid JSON: " + e.what());
    }
    MockFixtures fx;
    if (doc.contains("responses")) {
        for (auto& [key, value] : doc["responses"].items()) {
            if (!value.is_string()) {
                throw ParseError(path.string() + ": fixture response for " + key +
                                 " is not a string");
            }
            fx.responses[key] = value.get<std::string>();
        }
    }
    if (doc.contains("script")) {
        for (const auto& item : doc["script"]) {
            if (!item.is_string()) throw ParseError(path.string() + ": script item not a string");
            fx.script.push_back(item.get<std::string>());
        }
    }
    return fx;
}

void MockFixtures::save(const std::filesystem::path& path) const {
    ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "hrkg-mock-fixtures";
    std::vector<std::string> keys;
    keys.reserve(responses.size());
    for (const auto& [k, v] : responses) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    auto resp = ordered_json::object();
    for (const auto& k : keys) resp[k] = responses.at(k);
    doc["responses"] = std::move(resp);
    doc["script"] = script;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write mock fixtures file: " + path.string());
    out << doc.dump(2) << "\n";
}

std::vector<double> stub_embed(std::string_view text_in) {
    std::vector<double> v(kStubEmbedDim, 0.0);
    auto tokens = text::split_whitespace(text::to_lower_ascii(text_in));
    if (tokens.empty()) return v; // degenerate
    for (const auto& tok : tokens) {
        v[text::fnv1a64(tok) % kStubEmbedDim] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0; // degenerate-vector convention
    return dot;
}

// Bounds concurrent transport calls.
class InflightGate {
public:
    explicit InflightGate(int limit) : limit_(std::max(limit, 1)) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
};

namespace {

struct GateGuard {
    InflightGate& gate;
    explicit GateGuard(InflightGate& g) : gate(g) { gate.acquire(); }
    ~GateGuard() { gate.release(); }
};

std::string api_key_from_env(const EndpointConfig& config) {
    if (config.api_key_env.empty()) return {};
    const char* value = std::getenv(config.api_key_env.c_str());
    return value ? value : "";
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry_index) {
    double scale = std::pow(policy.factor, retry_index);
    // jitter: uniform in [0.5, 1.0) of the nominal delay
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    double jitter = 0.5 + (static_cast<double>(rng() >> 11) / 9007199254740992.0) * 0.5;
    auto ms = static_cast<std::int64_t>(static_cast<double>(policy.base_delay.count()) * scale *
                                        jitter);
    return std::chrono::milliseconds(ms);
}

} // namespace

LlmGateway::LlmGateway(std::optional<std::filesystem::path> cache_dir,
                       std::shared_ptr<Transport> transport, Sleeper sleeper, int max_inflight)
    : cache_dir_(std::move(cache_dir)),
      transport_(transport ? std::move(transport) : std::make_shared<HttpTransport>()),
      sleeper_(sleeper ? std::move(sleeper)
                       : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      gate_(std::make_unique<InflightGate>(max_inflight)) {
    if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

LlmGateway::~LlmGateway() = default;

void LlmGateway::set_mock_fixtures(std::shared_ptr<MockFixtures> fixtures) {
    std::lock_guard lock(mutex_);
    fixtures_ = std::move(fixtures);
}

void LlmGateway::set_mock_recorder(MockRecorder recorder) {
    std::lock_guard lock(mutex_);
    recorder_ = std::move(recorder);
}

std::optional<std::string> LlmGateway::cache_lookup(const std::string& key) {
    if (!cache_dir_) return std::nullopt;
    auto path = *cache_dir_ / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        json entry;
        in >> entry;
        if (entry.contains("response") && entry["response"].is_string()) {
            return entry["response"].get<std::string>();
        }
    } catch (const json::parse_error&) {
        // torn or stale entry: treat as a miss, it will be rewritten
    }
    return std::nullopt;
}

void LlmGateway::cache_store(const std::string& key, const ChatRequest& request,
                             const std::string& response) {
    if (!cache_dir_) return;
    ordered_json entry;
    entry["format_version"] = "1";
    entry["key"] = key;
    entry["model"] = request.config.model;
    entry["response"] = response;
    entry["created_at"] = text::iso8601_utc_now();
    std::ofstream out(*cache_dir_ / (key + ".json"), std::ios::binary | std::ios::trunc);
    out << entry.dump(2) << "\n";
}

std::string LlmGateway::transport_chat(const ChatRequest& request) {
    ordered_json body;
    body["model"] = request.config.model;
    auto messages = ordered_json::array();
    if (!request.system.empty()) {
        messages.push_back(ordered_json{{"role", "system"}, {"content", request.system}});
    }
    messages.push_back(ordered_json{{"role", "user"}, {"content", request.user}});
    body["messages"] = std::move(messages);
    body["temperature"] = request.config.temperature;
    body["max_tokens"] = request.config.max_output_tokens;
    if (request.config.request_seed) body["seed"] = *request.config.request_seed;
    const std::string payload = body.dump();
    const std::string api_key = api_key_from_env(request.config);

    const int max_retries = std::max(request.config.max_retries, 0);
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        HttpResult res;
        {
            GateGuard guard(*gate_);
            {
                std::lock_guard lock(mutex_);
                ++network_calls_;
            }
            res = transport_->post_json(request.config.base_url, "/chat/completions", payload,
                                        api_key, request.config.timeout_s);
        }
        bool retryable = false;
        if (!res.transport_ok) {
            retryable = true;
            last_error = "transport failure: " + res.error;
        } else if (res.status == 429 || res.status >= 500) {
            retryable = true;
            last_error = "HTTP " + std::to_string(res.status);
        } else if (res.status >= 400) {
            throw RequestError("chat request rejected with HTTP " + std::to_string(res.status) +
                               ": " + res.body);
        } else {
            json parsed;
            try {
                parsed = json::parse(res.body);
            } catch (const json::parse_error& e) {
                throw TransportError(std::string("chat response is not valid JSON: ") + e.what());
            }
            if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
                parsed["choices"].empty() || !parsed["choices"][0].contains("message") ||
                !parsed["choices"][0]["message"].contains("content") ||
                !parsed["choices"][0]["message"]["content"].is_string()) {
                throw TransportError("chat response has no choices[0].message.content");
            }
            auto content = parsed["choices"][0]["message"]["content"].get<std::string>();
            if (text::trim(content).empty()) {
                throw EmptyResponseError("endpoint returned empty assistant text");
            }
            return content;
        }
        if (retryable && attempt < max_retries) {
            sleeper_(backoff_delay(retry_, attempt));
        }
    }
    throw TransportError("chat failed after " + std::to_string(max_retries + 1) +
                         " attempts: " + last_error);
}

std::string LlmGateway::chat(const ChatRequest& request) {
    if (text::trim(request.user).empty()) {
        throw ValidationError("chat request has an empty user message");
    }
    const std::string key = chat_cache_key(request);
    {
        std::lock_guard lock(mutex_);
        ++chat_calls_;
    }

    {
        std::lock_guard lock(mutex_);
        // cache first: replayed runs never touch the network or fixtures
        if (auto cached = cache_lookup(key)) return *cached;

        if (request.config.mock) {
            if (fixtures_) {
                auto it = fixtures_->responses.find(key);
                if (it != fixtures_->responses.end()) {
                    cache_store(key, request, it->second);
                    return it->second;
                }
                if (!fixtures_->script.empty()) {
                    std::string response = std::move(fixtures_->script.front());
                    fixtures_->script.pop_front();
                    cache_store(key, request, response);
                    return response;
                }
            }
            if (recorder_) {
                std::string response = recorder_(request, key);
                recorded_[key] = response;
                cache_store(key, request, response);
                return response;
            }
            throw TransportError("mock mode has no fixture for digest " + key);
        }
    }

    std::string response = transport_chat(request);
    {
        std::lock_guard lock(mutex_);
        cache_store(key, request, response);
    }
    return response;
}

std::vector<std::vector<double>> LlmGateway::embed(const std::vector<std::string>& texts,
                                                   const EndpointConfig& config) {
    for (const auto& t : texts) {
        if (t.empty()) throw ValidationError("embed: texts must be non-empty strings");
    }
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());

    if (config.mock) {
        for (const auto& t : texts) out.push_back(stub_embed(t));
        return out;
    }

    const std::string api_key = api_key_from_env(config);
    const size_t batch = config.batch_size > 0 ? static_cast<size_t>(config.batch_size) : 16;
    for (size_t start = 0; start < texts.size(); start += batch) {
        const size_t end = std::min(texts.size(), start + batch);
        ordered_json body;
        body["model"] = config.model;
        auto input = ordered_json::array();
        for (size_t i = start; i < end; ++i) input.push_back(texts[i]);
        body["input"] = std::move(input);
        const std::string payload = body.dump();

        const int max_retries = std::max(config.max_retries, 0);
        std::string last_error;
        bool done = false;
        for (int attempt = 0; attempt <= max_retries && !done; ++attempt) {
            HttpResult res;
            {
                GateGuard guard(*gate_);
                {
                    std::lock_guard lock(mutex_);
                    ++network_calls_;
                }
                res = transport_->post_json(config.base_url, "/embeddings", payload, api_key,
                                            config.timeout_s);
            }
            if (!res.transport_ok || res.status == 429 || res.status >= 500) {
                last_error = res.transport_ok ? "HTTP " + std::to_string(res.status)
                                              : "transport failure: " + res.error;
                if (attempt < max_retries) {
                    sleeper_(backoff_delay(retry_, attempt));
                    continue;
                }
                throw TransportError("embedding request failed: " + last_error);
            }
            if (res.status >= 400) {
                throw RequestError("embedding request rejected with HTTP " +
                                   std::to_string(res.status) + ": " + res.body);
            }
            json parsed;
            try {
                parsed = json::parse(res.body);
            } catch (const json::parse_error& e) {
                throw TransportError(std::string("embedding response is not valid JSON: ") +
                                     e.what());
            }
            if (!parsed.contains("data") || !parsed["data"].is_array() ||
                parsed["data"].size() != end - start) {
                throw TransportError("embedding response data does not match batch size");
            }
            std::vector<std::vector<double>> batch_vecs(end - start);
            size_t position = 0;
            for (const auto& item : parsed["data"]) {
                if (!item.contains("embedding") || !item["embedding"].is_array()) {
                    throw TransportError("embedding response item has no embedding array");
                }
                size_t index = item.contains("index") && item["index"].is_number_unsigned()
                                   ? item["index"].get<size_t>()
                                   : position;
                ++position;
                if (index >= batch_vecs.size()) {
                    throw TransportError("embedding response index out of range");
                }
                std::vector<double> vec;
                vec.reserve(item["embedding"].size());
                for (const auto& x : item["embedding"]) vec.push_back(x.get<double>());
                batch_vecs[index] = std::move(vec);
            }
            for (auto& vec : batch_vecs) {
                if (!out.empty() && vec.size() != out.front().size()) {
                    throw TransportError("embedding dimension mismatch across batch");
                }
                if (!batch_vecs.empty() && vec.size() != batch_vecs.front().size()) {
                    throw TransportError("embedding dimension mismatch across batch");
                }
                double norm = 0.0;
                for (double x : vec) norm += x * x;
                norm = std::sqrt(norm);
                if (norm > 1e-12) {
                    for (double& x : vec) x /= norm;
                }
                out.push_back(std::move(vec));
            }
            done = true;
        }
    }
    return out;
}

std::int64_t LlmGateway::chat_calls() const {
    std::lock_guard lock(mutex_);
    return chat_calls_;
}

std::int64_t LlmGateway::network_calls() const {
    std::lock_guard lock(mutex_);
    return network_calls_;
}

} // namespace hrkg
