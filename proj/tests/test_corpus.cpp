#include <doctest.h>

#include <random>
#include <set>

#include "helpers.hpp"
#include "hrkg/corpus.hpp"

using namespace hrkg;

namespace {

// span rule fixture: tokens T0..T5, head [0,2), tail [4,5), qualifier [2,3)
const char* kSpanRecord = R"({"tokens": ["T0", "T1", "T2", "T3", "T4", "T5"],
  "relations": [{"head": [0, 2], "tail": [4, 5], "label": "L",
                 "qualifiers": [{"span": [2, 3], "label": "Q"}]}]})";

std::vector<Document> docs_with_ids(size_t n) {
    std::vector<Document> docs;
    for (size_t i = 0; i < n; ++i) {
        Document d;
        char id[16];
        std::snprintf(id, sizeof(id), "doc-%06zu", i);
        d.id = id;
        d.text = "text " + std::to_string(i);
        docs.push_back(std::move(d));
    }
    return docs;
}

} // namespace

TEST_CASE("parse_hyperred: span rule") {
    auto docs = parse_hyperred(kSpanRecord);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].id == "doc-000000");
    CHECK(docs[0].text == "T0 T1 T2 T3 T4 T5");
    REQUIRE(docs[0].gold.size() == 1);
    const auto& fact = docs[0].gold[0];
    CHECK(fact.subject == "T0 T1");
    CHECK(fact.relation == "L");
    CHECK(fact.object == "T4");
    REQUIRE(fact.qualifiers.size() == 1);
    CHECK(fact.qualifiers[0].key == "Q");
    CHECK(fact.qualifiers[0].value == "T2");
    REQUIRE(fact.provenance.has_value());
    CHECK(fact.provenance->doc_id == "doc-000000");
}

TEST_CASE("parse_hyperred: zero relations gives empty gold") {
    auto docs = parse_hyperred(R"({"tokens": ["a", "b"], "relations": []})");
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].gold.empty());
}

TEST_CASE("parse_hyperred: JSON array input autodetected") {
    auto docs = parse_hyperred(R"([{"tokens": ["a"], "relations": []},
                                   {"tokens": ["b"], "relations": []}])");
    CHECK(docs.size() == 2);
    CHECK(docs[1].id == "doc-000001");
}

TEST_CASE("parse_hyperred: errors name the record") {
    // out-of-range span
    const char* bad_span = R"({"tokens": ["a"], "relations":
        [{"head": [0, 1], "tail": [0, 5], "label": "L", "qualifiers": []}]})";
    try {
        parse_hyperred(bad_span);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("record 1") != std::string::npos);
        CHECK(msg.find("tail") != std::string::npos);
    }

    // malformed JSON line
    try {
        parse_hyperred("{\"tokens\": [\"a\"], \"relations\": []}\nnot json\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    // missing label
    const char* no_label = R"({"tokens": ["a", "b"], "relations":
        [{"head": [0, 1], "tail": [1, 2], "qualifiers": []}]})";
    CHECK_THROWS_AS(parse_hyperred(no_label), ParseError);
}

TEST_CASE("parse_hyperred: lenient mode skips bad records") {
    std::string data = R"({"tokens": ["a"], "relations": []})";
    data += "\nnot json\n";
    data += R"({"tokens": ["b"], "relations":
        [{"head": [0, 1], "tail": [0, 9], "label": "L", "qualifiers": []}]})";
    data += "\n";
    data += R"({"tokens": ["c"], "relations": []})";
    LoadOptions lenient;
    lenient.lenient = true;
    auto docs = parse_hyperred(data, lenient);
    CHECK(docs.size() == 2);
    CHECK_THROWS(parse_hyperred(data)); // strict by default
}

TEST_CASE("parse_hyperred: deterministic") {
    std::string two = std::string(kSpanRecord) + "\n" +
                      R"({"tokens": ["x", "y"], "relations": []})";
    auto a = parse_hyperred(two);
    auto b = parse_hyperred(two);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].text == b[i].text);
        CHECK(a[i].gold.size() == b[i].gold.size());
    }
}

TEST_CASE("split_dataset: floor sizes and remainder to train") {
    auto split = split_dataset(docs_with_ids(10), 7, {0.8, 0.1, 0.1});
    CHECK(split.train.size() == 8);
    CHECK(split.dev.size() == 1);
    CHECK(split.test.size() == 1);
    // frozen from the independent MT19937-64 shuffle oracle
    CHECK(split.dev[0].id == "doc-000006");
    CHECK(split.test[0].id == "doc-000005");
}

TEST_CASE("split_dataset: deterministic and seed-sensitive") {
    auto s7a = split_dataset(docs_with_ids(100), 7, {0.8, 0.1, 0.1});
    auto s7b = split_dataset(docs_with_ids(100), 7, {0.8, 0.1, 0.1});
    auto s8 = split_dataset(docs_with_ids(100), 8, {0.8, 0.1, 0.1});

    auto ids = [](const std::vector<Document>& v) {
        std::vector<std::string> out;
        for (const auto& d : v) out.push_back(d.id);
        return out;
    };
    CHECK(ids(s7a.train) == ids(s7b.train));
    CHECK(ids(s7a.dev) == ids(s7b.dev));

    // frozen oracle prefixes for both seeds
    std::vector<std::string> seed7_prefix{
        "doc-000033", "doc-000068", "doc-000032", "doc-000027", "doc-000007",
        "doc-000063", "doc-000054", "doc-000044", "doc-000090", "doc-000022"};
    std::vector<std::string> seed8_prefix{
        "doc-000076", "doc-000093", "doc-000043", "doc-000014", "doc-000085",
        "doc-000044", "doc-000095", "doc-000087", "doc-000006", "doc-000026"};
    auto t7 = ids(s7a.train);
    auto t8 = ids(s8.train);
    CHECK(std::vector<std::string>(t7.begin(), t7.begin() + 10) == seed7_prefix);
    CHECK(std::vector<std::string>(t8.begin(), t8.begin() + 10) == seed8_prefix);
    CHECK(std::set<std::string>(t7.begin(), t7.end()) !=
          std::set<std::string>(t8.begin(), t8.end()));
}

TEST_CASE("split_dataset: partition property") {
    std::mt19937_64 rng(505);
    for (int trial = 0; trial < 30; ++trial) {
        size_t n = rng() % 40;
        double a = static_cast<double>(rng() % 100) / 100.0;
        double b = (1.0 - a) * static_cast<double>(rng() % 100) / 100.0;
        std::array<double, 3> fractions{a, b, 1.0 - a - b};
        auto split = split_dataset(docs_with_ids(n), rng(), fractions);
        CHECK(split.train.size() + split.dev.size() + split.test.size() == n);
        std::set<std::string> seen;
        for (const auto* part : {&split.train, &split.dev, &split.test}) {
            for (const auto& d : *part) CHECK(seen.insert(d.id).second);
        }
        CHECK(seen.size() == n);
    }
}

TEST_CASE("split_dataset: bad fractions") {
    CHECK_THROWS_AS(split_dataset(docs_with_ids(4), 1, {0.5, 0.2, 0.2}), ValidationError);
    CHECK_THROWS_AS(split_dataset(docs_with_ids(4), 1, {-0.1, 0.6, 0.5}), ValidationError);
}

TEST_CASE("select_exemplars") {
    std::vector<Document> train = docs_with_ids(5);
    // qualifier counts: a:3, b:5, c:5; one doc without gold; one empty
    train[0].gold = {make_fact("s", "r", "o", {{"a", "1"}, {"b", "2"}, {"c", "3"}})};
    train[1].gold = {make_fact("s", "r", "o",
                               {{"a", "1"}, {"b", "2"}, {"c", "3"}, {"d", "4"}, {"e", "5"}})};
    train[2].gold = {make_fact("s2", "r", "o",
                               {{"a", "1"}, {"b", "2"}, {"c", "3"}, {"d", "4"}, {"e", "5"}})};

    SUBCASE("k=0") {
        CHECK(select_exemplars(train, 0, ExemplarStrategy::first_k).empty());
    }
    SUBCASE("first-k") {
        auto picks = select_exemplars(train, 2, ExemplarStrategy::first_k);
        REQUIRE(picks.size() == 2);
        CHECK(picks[0].first == train[0].text);
        CHECK(picks[1].first == train[1].text);
    }
    SUBCASE("qualifier-rich with id tie-break") {
        auto picks = select_exemplars(train, 3, ExemplarStrategy::qualifier_rich);
        REQUIRE(picks.size() == 3);
        CHECK(picks[0].first == train[1].text); // 5 qualifiers, id doc-000001
        CHECK(picks[1].first == train[2].text); // 5 qualifiers, id doc-000002
        CHECK(picks[2].first == train[0].text); // 3 qualifiers
    }
    SUBCASE("k beyond eligible is not an error") {
        CHECK(select_exemplars(train, 10, ExemplarStrategy::first_k).size() == 3);
    }
    SUBCASE("seeded-random is deterministic per seed") {
        auto a = select_exemplars(train, 2, ExemplarStrategy::seeded_random, 42);
        auto b = select_exemplars(train, 2, ExemplarStrategy::seeded_random, 42);
        CHECK(a == b);
    }
}

TEST_CASE("interchange corpus round trip") {
    auto docs = parse_hyperred(kSpanRecord);
    auto bytes = corpus_to_json(docs);
    auto back = corpus_from_json(bytes);
    REQUIRE(back.size() == 1);
    CHECK(back[0].id == docs[0].id);
    CHECK(back[0].text == docs[0].text);
    REQUIRE(back[0].tokens.has_value());
    CHECK(*back[0].tokens == *docs[0].tokens);
    REQUIRE(back[0].gold.size() == 1);
    CHECK(fact_equal_strict(back[0].gold[0], docs[0].gold[0]));
    CHECK(back[0].gold[0].provenance->doc_id == back[0].id);
    CHECK(corpus_to_json(back) == bytes);
}

TEST_CASE("corpus_from_json: rejects duplicates and junk") {
    CHECK_THROWS_AS(corpus_from_json("not json"), ParseError);
    CHECK_THROWS_AS(corpus_from_json(R"({"kind": "other", "documents": []})"), ParseError);
    auto dup = R"({"format_version": "1", "kind": "hrkg-corpus", "documents": [
        {"id": "a", "text": "t", "gold": []},
        {"id": "a", "text": "t", "gold": []}]})";
    CHECK_THROWS_AS(corpus_from_json(dup), ValidationError);
}

TEST_CASE("loaded gold facts satisfy fact invariants") {
    auto sample_path = testutil::source_dir() / "data" / "hyperred_sample.jsonl";
    auto docs = load_hyperred(sample_path);
    for (const auto& d : docs) {
        for (const auto& f : d.gold) {
            CHECK_FALSE(f.subject.empty());
            CHECK_FALSE(f.relation.empty());
            CHECK_FALSE(f.object.empty());
            CHECK(std::is_sorted(f.qualifiers.begin(), f.qualifiers.end()));
            CHECK(f.provenance->doc_id == d.id);
            // canonicalization accepts every loaded fact unchanged
            auto rebuilt = make_fact(f.subject, f.relation, f.object, f.qualifiers);
            CHECK(canonicalize_fact(rebuilt) == canonicalize_fact(f));
        }
    }
}
