#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "hrkg/evaluation.hpp"
#include "hrkg/gateway.hpp"

using namespace hrkg;

namespace {

const EmbedderFn kStub = [](const std::string& s) { return stub_embed(s); };

BatchEmbedderFn stub_batch() {
    return [](const std::vector<std::string>& texts) {
        std::vector<std::vector<double>> out;
        for (const auto& t : texts) out.push_back(stub_embed(t));
        return out;
    };
}

Document doc_with(std::string id, std::vector<HyperRelationalFact> gold) {
    Document d;
    d.id = std::move(id);
    d.text = "irrelevant";
    d.gold = std::move(gold);
    return d;
}

} // namespace

TEST_CASE("soft_scores: conventions") {
    std::vector<HyperRelationalFact> none;
    std::vector<HyperRelationalFact> one{make_fact("a", "r", "b")};

    auto both_empty = soft_scores(none, none, kStub);
    CHECK(both_empty.precision == 1.0);
    CHECK(both_empty.recall == 1.0);
    CHECK(both_empty.f1 == 1.0);

    auto pred_empty = soft_scores(none, one, kStub);
    CHECK(pred_empty.precision == 0.0);
    CHECK(pred_empty.recall == 0.0);
    CHECK(pred_empty.f1 == 0.0);

    auto gold_empty = soft_scores(one, none, kStub);
    CHECK(gold_empty.f1 == 0.0);
}

TEST_CASE("soft_scores: identical sets score perfectly") {
    std::mt19937_64 rng(808);
    for (int i = 0; i < 20; ++i) {
        auto facts = testutil::random_facts(rng, 5);
        if (facts.empty()) continue;
        auto scores = soft_scores(facts, facts, kStub);
        CHECK(scores.precision == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(scores.recall == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(scores.f1 == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("soft_scores: frozen worked example") {
    // pred = {f1}, gold = {f1, f2}; s = clamped cosine(f1, f2) under the stub
    // embedder, hand-computed offline: s = 0.5303300858899106
    auto f1 = make_fact("Barack Obama", "position held", "President",
                        {{"start time", "2009"}});
    auto f2 = make_fact("Hawaii", "instance of", "island");
    std::vector<HyperRelationalFact> pred{f1};
    std::vector<HyperRelationalFact> gold{f1, f2};
    auto scores = soft_scores(pred, gold, kStub);
    CHECK(scores.precision == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(scores.recall == doctest::Approx(0.7651650429449552).epsilon(1e-12));
    CHECK(scores.f1 == doctest::Approx(0.8669614730964464).epsilon(1e-12));
}

TEST_CASE("soft_scores: symmetry P(pred,gold) == R(gold,pred)") {
    std::mt19937_64 rng(909);
    for (int i = 0; i < 100; ++i) {
        auto a = testutil::random_facts(rng, 5);
        auto b = testutil::random_facts(rng, 5);
        auto fwd = soft_scores(a, b, kStub);
        auto rev = soft_scores(b, a, kStub);
        CHECK(fwd.precision == doctest::Approx(rev.recall).epsilon(1e-12));
        CHECK(fwd.recall == doctest::Approx(rev.precision).epsilon(1e-12));
    }
}

TEST_CASE("soft_scores: permutation invariance and bounds") {
    std::mt19937_64 rng(1010);
    for (int i = 0; i < 50; ++i) {
        auto pred = testutil::random_facts(rng, 6);
        auto gold = testutil::random_facts(rng, 6);
        auto base = soft_scores(pred, gold, kStub);
        CHECK(base.precision >= 0.0);
        CHECK(base.precision <= 1.0);
        CHECK(base.recall >= 0.0);
        CHECK(base.recall <= 1.0);
        CHECK(base.f1 >= 0.0);
        CHECK(base.f1 <= 1.0);

        std::shuffle(pred.begin(), pred.end(), rng);
        std::shuffle(gold.begin(), gold.end(), rng);
        auto shuffled = soft_scores(pred, gold, kStub);
        CHECK(shuffled.precision == doctest::Approx(base.precision).epsilon(1e-12));
        CHECK(shuffled.recall == doctest::Approx(base.recall).epsilon(1e-12));
        CHECK(shuffled.f1 == doctest::Approx(base.f1).epsilon(1e-12));
    }
}

TEST_CASE("strict_scores: set arithmetic example") {
    auto A = make_fact("a", "r", "x");
    auto B = make_fact("b", "r", "x");
    auto C = make_fact("c", "r", "x");
    std::vector<HyperRelationalFact> pred{A, B};
    std::vector<HyperRelationalFact> gold{B, C};
    auto scores = strict_scores(pred, gold, StrictMode::full);
    CHECK(scores.precision == doctest::Approx(0.5));
    CHECK(scores.recall == doctest::Approx(0.5));
    CHECK(scores.f1 == doctest::Approx(0.5));
}

TEST_CASE("strict_scores: triple-only ignores qualifiers") {
    auto with_q = make_fact("a", "r", "b", {{"k", "v"}});
    auto without = make_fact("a", "r", "b", {{"k2", "v2"}});
    std::vector<HyperRelationalFact> pred{with_q};
    std::vector<HyperRelationalFact> gold{without};
    CHECK(strict_scores(pred, gold, StrictMode::full).f1 == 0.0);
    CHECK(strict_scores(pred, gold, StrictMode::triple_only).f1 == doctest::Approx(1.0));
}

TEST_CASE("strict_scores: conventions and dedup") {
    std::vector<HyperRelationalFact> none;
    std::vector<HyperRelationalFact> one{make_fact("a", "r", "b")};
    CHECK(strict_scores(none, none, StrictMode::full).f1 == 1.0);
    CHECK(strict_scores(one, none, StrictMode::full).f1 == 0.0);
    CHECK(strict_scores(none, one, StrictMode::full).f1 == 0.0);

    // duplicates collapse before counting
    std::vector<HyperRelationalFact> dup{one[0], one[0], one[0]};
    auto scores = strict_scores(dup, one, StrictMode::full);
    CHECK(scores.precision == doctest::Approx(1.0));
}

TEST_CASE("strict_scores: adding a matching fact never lowers recall or F1") {
    std::mt19937_64 rng(1111);
    for (int i = 0; i < 50; ++i) {
        auto gold = testutil::random_facts(rng, 5);
        if (gold.empty()) continue;
        auto pred = testutil::random_facts(rng, 4);
        auto before = strict_scores(pred, gold, StrictMode::full);

        // pick an unmatched gold fact if any
        std::set<std::string> pset;
        for (const auto& f : pred) pset.insert(canonicalize_fact(f));
        const HyperRelationalFact* unmatched = nullptr;
        for (const auto& g : gold) {
            if (!pset.count(canonicalize_fact(g))) {
                unmatched = &g;
                break;
            }
        }
        if (!unmatched) continue;
        pred.push_back(*unmatched);
        auto after = strict_scores(pred, gold, StrictMode::full);
        CHECK(after.recall >= before.recall - 1e-12);
        CHECK(after.f1 >= before.f1 - 1e-12);
    }
}

TEST_CASE("score_corpus: macro is the unweighted mean") {
    auto fa = make_fact("a", "r", "b");
    auto fb = make_fact("c", "r", "d");
    std::vector<std::pair<Document, std::vector<HyperRelationalFact>>> results;
    results.emplace_back(doc_with("doc-2", {fa}), std::vector<HyperRelationalFact>{fa});
    results.emplace_back(doc_with("doc-1", {fa, fb}), std::vector<HyperRelationalFact>{fa});

    ReportMetadata meta;
    meta.embedder_model = "stub";
    auto report = score_corpus(results, stub_batch(), meta);

    REQUIRE(report.documents.size() == 2);
    CHECK(report.documents[0].doc_id == "doc-1"); // sorted by id
    CHECK(report.documents[1].doc_id == "doc-2");

    // doc-1: P=1, R=0.5, F1=2/3; doc-2: perfect
    CHECK(report.documents[0].strict.recall == doctest::Approx(0.5));
    CHECK(report.macro_strict.precision ==
          doctest::Approx((report.documents[0].strict.precision +
                           report.documents[1].strict.precision) / 2.0));
    CHECK(report.macro_strict.f1 ==
          doctest::Approx((report.documents[0].strict.f1 + report.documents[1].strict.f1) / 2.0));

    // micro pools counts: matches 2, predicted 2, gold 3
    CHECK(report.micro_full.matches == 2);
    CHECK(report.micro_full.predicted == 2);
    CHECK(report.micro_full.gold == 3);
    CHECK(report.micro_full.scores.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("score_corpus: single-document corpus equals its doc scores") {
    auto fa = make_fact("a", "r", "b");
    std::vector<std::pair<Document, std::vector<HyperRelationalFact>>> results;
    results.emplace_back(doc_with("only", {fa}), std::vector<HyperRelationalFact>{fa});
    auto report = score_corpus(results, stub_batch(), {});
    CHECK(report.macro_soft.f1 == doctest::Approx(report.documents[0].soft.f1));
    CHECK(report.macro_strict.f1 == doctest::Approx(report.documents[0].strict.f1));
}

TEST_CASE("score_corpus: duplicate documents rejected") {
    std::vector<std::pair<Document, std::vector<HyperRelationalFact>>> results;
    results.emplace_back(doc_with("dup", {}), std::vector<HyperRelationalFact>{});
    results.emplace_back(doc_with("dup", {}), std::vector<HyperRelationalFact>{});
    CHECK_THROWS_AS(score_corpus(results, stub_batch(), {}), ValidationError);
}

TEST_CASE("report JSON round trip and normalization") {
    auto fa = make_fact("a", "r", "b");
    std::vector<std::pair<Document, std::vector<HyperRelationalFact>>> results;
    results.emplace_back(doc_with("doc-1", {fa}), std::vector<HyperRelationalFact>{fa});
    ReportMetadata meta;
    meta.embedder_model = "stub";
    meta.extractor_model = "ex";
    meta.corrector_model = "co";
    meta.config_digest = "abc123";
    auto report = score_corpus(results, stub_batch(), meta);

    auto bytes = report_to_json_text(report, /*normalize_timestamp=*/true);
    auto back = report_from_json_text(bytes);
    CHECK(back.metadata.timestamp == "1970-01-01T00:00:00Z");
    CHECK(back.metadata.config_digest == "abc123");
    CHECK(back.macro_soft.f1 == doctest::Approx(report.macro_soft.f1).epsilon(1e-12));
    CHECK(report_to_json_text(back, true) == bytes);

    auto table = render_report_table(back);
    CHECK(table.find("hrkg") != std::string::npos);
    CHECK(table.find("ex+co") != std::string::npos);
    CHECK(table.find("soft (macro)") != std::string::npos);
}

TEST_CASE("macro aggregates match a recomputation within 1e-12") {
    std::mt19937_64 rng(1212);
    std::vector<std::pair<Document, std::vector<HyperRelationalFact>>> results;
    for (int i = 0; i < 7; ++i) {
        results.emplace_back(doc_with("doc-" + std::to_string(i),
                                      testutil::random_facts(rng, 4)),
                             testutil::random_facts(rng, 4));
    }
    auto report = score_corpus(results, stub_batch(), {});
    double p = 0, r = 0, f = 0;
    for (const auto& d : report.documents) {
        p += d.soft.precision;
        r += d.soft.recall;
        f += d.soft.f1;
    }
    auto n = static_cast<double>(report.documents.size());
    CHECK(std::abs(report.macro_soft.precision - p / n) < 1e-12);
    CHECK(std::abs(report.macro_soft.recall - r / n) < 1e-12);
    CHECK(std::abs(report.macro_soft.f1 - f / n) < 1e-12);
}
