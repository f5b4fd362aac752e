#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "hrkg/gateway.hpp"

using namespace hrkg;

namespace {

EndpointConfig test_config() {
    EndpointConfig cfg;
    cfg.model = "test-model";
    cfg.max_retries = 3;
    return cfg;
}

HttpResult ok_chat(const std::string& content) {
    HttpResult r;
    r.transport_ok = true;
    r.status = 200;
    nlohmann::json body = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
    r.body = body.dump();
    return r;
}

HttpResult status_only(int code) {
    HttpResult r;
    r.transport_ok = true;
    r.status = code;
    r.body = "{}";
    return r;
}

} // namespace

TEST_CASE("cache key sensitivity: every keyed field changes the digest") {
    ChatRequest base;
    base.config = test_config();
    base.system = "sys";
    base.user = "user";
    auto k0 = chat_cache_key(base);

    auto variant = base;
    variant.config.model = "other-model";
    CHECK(chat_cache_key(variant) != k0);

    variant = base;
    variant.config.temperature = 0.5;
    CHECK(chat_cache_key(variant) != k0);

    variant = base;
    variant.config.max_output_tokens = 2048;
    CHECK(chat_cache_key(variant) != k0);

    variant = base;
    variant.config.request_seed = 1;
    CHECK(chat_cache_key(variant) != k0);

    variant = base;
    variant.config.request_seed.reset();
    CHECK(chat_cache_key(variant) != k0);

    variant = base;
    variant.system = "sys2";
    CHECK(chat_cache_key(variant) != k0);

    variant = base;
    variant.user = "user2";
    CHECK(chat_cache_key(variant) != k0);

    // boundary shuffle between system and user must not collide
    variant = base;
    variant.system = "sysu";
    variant.user = "ser";
    CHECK(chat_cache_key(variant) != k0);

    // unkeyed fields do not change it
    variant = base;
    variant.config.base_url = "http://elsewhere:9999/v2";
    variant.config.timeout_s = 5;
    variant.config.max_retries = 9;
    CHECK(chat_cache_key(variant) == k0);
}

TEST_CASE("chat: second identical request is served from cache") {
    auto dir = testutil::fresh_temp_dir("cache");
    auto transport = std::make_shared<ScriptedTransport>(
        std::deque<HttpResult>{ok_chat("hello")});
    LlmGateway gateway(dir, transport, [](std::chrono::milliseconds) {});

    ChatRequest req;
    req.config = test_config();
    req.user = "hi";
    CHECK(gateway.chat(req) == "hello");
    CHECK(gateway.chat(req) == "hello"); // script is exhausted: must be a cache hit
    CHECK(transport->calls() == 1);
    CHECK(gateway.chat_calls() == 2);
    CHECK(gateway.network_calls() == 1);
}

TEST_CASE("chat: 500 twice then 200 succeeds on the third attempt") {
    int sleeps = 0;
    auto transport = std::make_shared<ScriptedTransport>(
        std::deque<HttpResult>{status_only(500), status_only(500), ok_chat("recovered")});
    LlmGateway gateway(std::nullopt, transport,
                       [&](std::chrono::milliseconds) { ++sleeps; });

    ChatRequest req;
    req.config = test_config();
    req.user = "hi";
    CHECK(gateway.chat(req) == "recovered");
    CHECK(transport->calls() == 3);
    CHECK(sleeps == 2);
}

TEST_CASE("chat: retries exhausted becomes a transport error") {
    auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{
        status_only(500), status_only(503), status_only(429), status_only(500)});
    LlmGateway gateway(std::nullopt, transport, [](std::chrono::milliseconds) {});
    ChatRequest req;
    req.config = test_config(); // max_retries = 3 -> 4 attempts
    req.user = "hi";
    CHECK_THROWS_AS(gateway.chat(req), TransportError);
    CHECK(transport->calls() == 4);
}

TEST_CASE("chat: plain 4xx is a request error with no retry") {
    auto transport = std::make_shared<ScriptedTransport>(
        std::deque<HttpResult>{status_only(404), ok_chat("never reached")});
    LlmGateway gateway(std::nullopt, transport, [](std::chrono::milliseconds) {});
    ChatRequest req;
    req.config = test_config();
    req.user = "hi";
    CHECK_THROWS_AS(gateway.chat(req), RequestError);
    CHECK(transport->calls() == 1);
}

TEST_CASE("chat: empty assistant text is an error") {
    auto transport = std::make_shared<ScriptedTransport>(
        std::deque<HttpResult>{ok_chat("  \n ")});
    LlmGateway gateway(std::nullopt, transport, [](std::chrono::milliseconds) {});
    ChatRequest req;
    req.config = test_config();
    req.user = "hi";
    CHECK_THROWS_AS(gateway.chat(req), EmptyResponseError);
}

TEST_CASE("chat: empty user message rejected") {
    LlmGateway gateway(std::nullopt, std::make_shared<ScriptedTransport>(std::deque<HttpResult>{}),
                       [](std::chrono::milliseconds) {});
    ChatRequest req;
    req.config = test_config();
    req.user = "  ";
    CHECK_THROWS_AS(gateway.chat(req), ValidationError);
}

TEST_CASE("mock mode: digest fixtures, then script, then error") {
    LlmGateway gateway(std::nullopt, nullptr, [](std::chrono::milliseconds) {});
    ChatRequest req;
    req.config = test_config();
    req.config.mock = true;
    req.user = "fixture me";

    auto fixtures = std::make_shared<MockFixtures>();
    fixtures->responses[chat_cache_key(req)] = "hello";
    fixtures->script.push_back("scripted-1");
    gateway.set_mock_fixtures(fixtures);

    CHECK(gateway.chat(req) == "hello"); // digest mapping wins

    ChatRequest other = req;
    other.user = "no fixture";
    CHECK(gateway.chat(other) == "scripted-1"); // script consumed in order

    ChatRequest third = req;
    third.user = "nothing left";
    CHECK_THROWS_AS(gateway.chat(third), TransportError);
}

TEST_CASE("mock fixtures: file round trip") {
    auto dir = testutil::fresh_temp_dir("fixtures");
    MockFixtures fx;
    fx.responses["abc"] = "one";
    fx.responses["def"] = "two";
    fx.script = {"s1", "s2"};
    fx.save(dir / "fx.json");
    auto loaded = MockFixtures::load(dir / "fx.json");
    CHECK(loaded.responses == fx.responses);
    CHECK(loaded.script == fx.script);
}

TEST_CASE("stub_embed: frozen oracle values") {
    // FNV-1a mod 256: h("a") = 140, h("b") = 165 (from the offline oracle)
    auto v = stub_embed("a b a");
    REQUIRE(v.size() == kStubEmbedDim);
    CHECK(v[140] == doctest::Approx(0.8944271909999159).epsilon(1e-12)); // 2/sqrt(5)
    CHECK(v[165] == doctest::Approx(0.4472135954999579).epsilon(1e-12)); // 1/sqrt(5)
    double norm = 0.0;
    for (double x : v) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));

    // case folding: same direction
    CHECK(cosine(stub_embed("A a"), stub_embed("a")) == doctest::Approx(1.0).epsilon(1e-12));

    // h("alpha") = 43, h("beta") = 167: disjoint indices, cosine 0
    CHECK(cosine(stub_embed("alpha"), stub_embed("beta")) == 0.0);

    // degenerate empty text: zero vector, cosine defined as 0
    auto zero = stub_embed("");
    CHECK(cosine(zero, stub_embed("a")) == 0.0);
    CHECK(cosine(zero, zero) == 0.0);
}

TEST_CASE("embed: mock mode produces unit vectors in order") {
    LlmGateway gateway(std::nullopt, nullptr, [](std::chrono::milliseconds) {});
    EndpointConfig cfg = test_config();
    cfg.mock = true;
    auto vecs = gateway.embed({"x", "x", "alpha"}, cfg);
    REQUIRE(vecs.size() == 3);
    CHECK(vecs[0] == vecs[1]);
    for (const auto& v : vecs) {
        double norm = 0.0;
        for (double x : v) norm += x * x;
        CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
    }
    CHECK_THROWS_AS(gateway.embed({""}, cfg), ValidationError);
}

TEST_CASE("embed: live path normalizes and batches") {
    // two batches of 2 for 3 texts; backend returns unnormalized vectors
    auto make_embed_response = [](std::vector<std::vector<double>> vecs) {
        nlohmann::json data = nlohmann::json::array();
        for (size_t i = 0; i < vecs.size(); ++i) {
            data.push_back({{"index", i}, {"embedding", vecs[i]}});
        }
        HttpResult r;
        r.transport_ok = true;
        r.status = 200;
        r.body = nlohmann::json{{"data", data}}.dump();
        return r;
    };
    auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{
        make_embed_response({{3.0, 4.0}, {1.0, 0.0}}),
        make_embed_response({{0.0, 2.0}}),
    });
    LlmGateway gateway(std::nullopt, transport, [](std::chrono::milliseconds) {});
    EndpointConfig cfg = test_config();
    cfg.batch_size = 2;
    auto vecs = gateway.embed({"t1", "t2", "t3"}, cfg);
    REQUIRE(vecs.size() == 3);
    CHECK(vecs[0][0] == doctest::Approx(0.6));
    CHECK(vecs[0][1] == doctest::Approx(0.8));
    CHECK(vecs[2][1] == doctest::Approx(1.0));
    CHECK(transport->calls() == 2);
}

TEST_CASE("embed: dimension mismatch across a batch") {
    nlohmann::json data = nlohmann::json::array();
    data.push_back({{"index", 0}, {"embedding", {1.0, 0.0}}});
    data.push_back({{"index", 1}, {"embedding", {1.0, 0.0, 0.0}}});
    HttpResult r;
    r.transport_ok = true;
    r.status = 200;
    r.body = nlohmann::json{{"data", data}}.dump();
    auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{r});
    LlmGateway gateway(std::nullopt, transport, [](std::chrono::milliseconds) {});
    CHECK_THROWS_AS(gateway.embed({"a", "b"}, test_config()), TransportError);
}

TEST_CASE("cache replay: byte-identical responses across gateway instances") {
    auto dir = testutil::fresh_temp_dir("cache-replay");
    ChatRequest req;
    req.config = test_config();
    req.user = "question";
    {
        auto transport = std::make_shared<ScriptedTransport>(
            std::deque<HttpResult>{ok_chat("the answer")});
        LlmGateway gateway(dir, transport, [](std::chrono::milliseconds) {});
        CHECK(gateway.chat(req) == "the answer");
    }
    {
        // no transport responses left: everything must come from the cache
        auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{});
        LlmGateway gateway(dir, transport, [](std::chrono::milliseconds) {});
        CHECK(gateway.chat(req) == "the answer");
        CHECK(transport->calls() == 0);
    }
}
