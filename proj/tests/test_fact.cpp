#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "hrkg/fact.hpp"
#include "hrkg/text.hpp"

using namespace hrkg;

TEST_CASE("canonicalize_fact: layout rule") {
    auto fact = make_fact("Barack Obama", "position held", "President",
                          {{"start time", "2009"}});
    CHECK(canonicalize_fact(fact) ==
          "Barack Obama | position held | President | start time=2009");
}

TEST_CASE("canonicalize_fact: whitespace collapse") {
    auto fact = make_fact("  Barack   Obama ", "position held", "President");
    CHECK(canonicalize_fact(fact) == "Barack Obama | position held | President");
}

TEST_CASE("canonicalize_fact: qualifier ordering") {
    auto fact = make_fact("s", "r", "o", {{"b", "2"}, {"a", "1"}});
    CHECK(canonicalize_fact(fact) == "s | r | o | a=1 | b=2");
}

TEST_CASE("canonicalize_fact: duplicate qualifiers removed, not rejected") {
    auto fact = make_fact("s", "r", "o", {{"a", "1"}, {"a", "1"}, {"a", "2"}});
    CHECK(fact.qualifiers.size() == 2);
    CHECK(canonicalize_fact(fact) == "s | r | o | a=1 | a=2");
}

TEST_CASE("canonicalize_fact: metacharacter escaping") {
    auto fact = make_fact("a|b", "k=v", "back\\slash");
    CHECK(canonicalize_fact(fact) == "a\\|b | k\\=v | back\\\\slash");
}

TEST_CASE("canonicalize_fact: NFC normalization merges equivalent forms") {
    // "é" precomposed vs "e" + combining acute
    auto composed = make_fact("café", "r", "o");
    auto decomposed = make_fact("café", "r", "o");
    CHECK(canonicalize_fact(composed) == canonicalize_fact(decomposed));
}

TEST_CASE("make_fact: empty fields rejected") {
    CHECK_THROWS_AS(make_fact("", "r", "o"), ValidationError);
    CHECK_THROWS_AS(make_fact("s", "  \t ", "o"), ValidationError);
    CHECK_THROWS_AS(make_fact("s", "r", "o", {{"", "v"}}), ValidationError);
    CHECK_THROWS_AS(make_fact("s", "r", "o", {{"k", " "}}), ValidationError);
}

TEST_CASE("fact_equal_strict") {
    auto a = make_fact("s", "r", "o", {{"k", "v"}});
    auto b = make_fact("s", "r", "o", {{"k", "v"}});
    CHECK(fact_equal_strict(a, b));

    // qualifier order does not matter
    auto c = make_fact("s", "r", "o", {{"b", "2"}, {"a", "1"}});
    auto d = make_fact("s", "r", "o", {{"a", "1"}, {"b", "2"}});
    CHECK(fact_equal_strict(c, d));

    // case is preserved and significant
    auto e = make_fact("s", "r", "president");
    auto f = make_fact("s", "r", "President");
    CHECK_FALSE(fact_equal_strict(e, f));
}

TEST_CASE("canonicalization is idempotent") {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 200; ++i) {
        auto fact = testutil::random_fact(rng);
        auto canonical = canonicalize_fact(fact);
        auto rebuilt = make_fact(fact.subject, fact.relation, fact.object, fact.qualifiers);
        CHECK(canonicalize_fact(rebuilt) == canonical);
    }
}

TEST_CASE("escaping round trip: canonicalize then parse back") {
    std::mt19937_64 rng(202);
    for (int i = 0; i < 500; ++i) {
        auto fact = testutil::random_fact(rng);
        auto parsed = parse_canonical_fact(canonicalize_fact(fact));
        CHECK(parsed.subject == fact.subject);
        CHECK(parsed.relation == fact.relation);
        CHECK(parsed.object == fact.object);
        CHECK(parsed.qualifiers == fact.qualifiers);
        CHECK(canonicalize_fact(parsed) == canonicalize_fact(fact));
    }
}

TEST_CASE("parse_canonical_fact: malformed inputs") {
    CHECK_THROWS_AS(parse_canonical_fact("just two | segments"), ParseError);
    CHECK_THROWS_AS(parse_canonical_fact("s | r | o | no-equals-here"), ParseError);
}

TEST_CASE("fact JSON round trip keeps provenance") {
    auto fact = make_fact("s", "r", "o", {{"k", "v"}}, Provenance{"doc-000007", 2});
    auto j = fact_to_json(fact, /*with_provenance=*/true);
    auto back = fact_from_json(j, "test");
    CHECK(fact_equal_strict(fact, back));
    REQUIRE(back.provenance.has_value());
    CHECK(back.provenance->doc_id == "doc-000007");
    CHECK(back.provenance->attempt == 2);
}

TEST_CASE("fact_from_json: schema violations name the context") {
    auto missing = nlohmann::json::parse(R"({"subject": "s", "relation": "r"})");
    try {
        fact_from_json(missing, "facts[3]");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("facts[3]") != std::string::npos);
    }
    auto bad_qual = nlohmann::json::parse(
        R"({"subject": "s", "relation": "r", "object": "o", "qualifiers": [{"key": "k"}]})");
    CHECK_THROWS_AS(fact_from_json(bad_qual, "x"), ValidationError);
}
