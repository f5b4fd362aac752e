#include "hrkg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "hrkg/errors.hpp"
#include "hrkg/gateway.hpp"
#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double f1_of(double p, double r) {
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

} // namespace

Pr soft_scores(std::span<const HyperRelationalFact> pred,
               std::span<const HyperRelationalFact> gold, const EmbedderFn& embed) {
    if (pred.empty() && gold.empty()) return {1.0, 1.0, 1.0};
    if (pred.empty() || gold.empty()) return {0.0, 0.0, 0.0};

    std::vector<std::vector<double>> pv, gv;
    pv.reserve(pred.size());
    gv.reserve(gold.size());
    for (const auto& f : pred) pv.push_back(embed(canonicalize_fact(f)));
    for (const auto& f : gold) gv.push_back(embed(canonicalize_fact(f)));

    std::vector<double> best_for_gold(gold.size(), 0.0);
    double p_sum = 0.0;
    for (size_t i = 0; i < pv.size(); ++i) {
        double best = 0.0;
        for (size_t j = 0; j < gv.size(); ++j) {
            double s = std::clamp(cosine(pv[i], gv[j]), 0.0, 1.0);
            best = std::max(best, s);
            best_for_gold[j] = std::max(best_for_gold[j], s);
        }
        p_sum += best;
    }
    double r_sum = 0.0;
    for (double s : best_for_gold) r_sum += s;

    Pr out;
    out.precision = p_sum / static_cast<double>(pv.size());
    out.recall = r_sum / static_cast<double>(gv.size());
    out.f1 = f1_of(out.precision, out.recall);
    return out;
}

Pr strict_scores(std::span<const HyperRelationalFact> pred,
                 std::span<const HyperRelationalFact> gold, StrictMode mode) {
    auto key = [&](const HyperRelationalFact& f) {
        return mode == StrictMode::full ? canonicalize_fact(f) : canonical_triple(f);
    };
    std::set<std::string> pset, gset;
    for (const auto& f : pred) pset.insert(key(f));
    for (const auto& f : gold) gset.insert(key(f));

    if (pset.empty() && gset.empty()) return {1.0, 1.0, 1.0};
    if (pset.empty() || gset.empty()) return {0.0, 0.0, 0.0};

    size_t matches = 0;
    for (const auto& k : pset) {
        if (gset.count(k)) ++matches;
    }
    Pr out;
    out.precision = static_cast<double>(matches) / static_cast<double>(pset.size());
    out.recall = static_cast<double>(matches) / static_cast<double>(gset.size());
    out.f1 = f1_of(out.precision, out.recall);
    return out;
}

ScoreReport score_corpus(
    const std::vector<std::pair<Document, std::vector<HyperRelationalFact>>>& results,
    const BatchEmbedderFn& embed, ReportMetadata metadata) {
    {
        std::set<std::string> ids;
        for (const auto& [doc, facts] : results) {
            if (!ids.insert(doc.id).second) {
                throw ValidationError("duplicate document in scoring input: " + doc.id);
            }
        }
    }

    // one embedding per distinct canonical string, batched
    std::set<std::string> unique;
    for (const auto& [doc, facts] : results) {
        for (const auto& f : facts) unique.insert(canonicalize_fact(f));
        for (const auto& f : doc.gold) unique.insert(canonicalize_fact(f));
    }
    std::vector<std::string> texts(unique.begin(), unique.end());
    std::unordered_map<std::string, std::vector<double>> memo;
    if (!texts.empty()) {
        auto vectors = embed(texts);
        if (vectors.size() != texts.size()) {
            throw TransportError("embedder returned a different number of vectors than texts");
        }
        for (size_t i = 0; i < texts.size(); ++i) memo.emplace(texts[i], std::move(vectors[i]));
    }
    EmbedderFn memo_embed = [&memo](const std::string& s) -> std::vector<double> {
        auto it = memo.find(s);
        if (it == memo.end()) throw ValidationError("embedding memo miss for: " + s);
        return it->second;
    };

    ScoreReport report;
    report.metadata = std::move(metadata);
    if (report.metadata.timestamp.empty()) {
        report.metadata.timestamp = text::iso8601_utc_now();
    }

    std::vector<const std::pair<Document, std::vector<HyperRelationalFact>>*> ordered;
    ordered.reserve(results.size());
    for (const auto& r : results) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->first.id < b->first.id; });

    for (const auto* entry : ordered) {
        const auto& [doc, facts] = *entry;
        DocScores ds;
        ds.doc_id = doc.id;
        ds.strict = strict_scores(facts, doc.gold, StrictMode::full);
        ds.strict_triple = strict_scores(facts, doc.gold, StrictMode::triple_only);
        ds.soft = soft_scores(facts, doc.gold, memo_embed);

        std::set<std::string> pset, gset;
        for (const auto& f : facts) pset.insert(canonicalize_fact(f));
        for (const auto& f : doc.gold) gset.insert(canonicalize_fact(f));
        ds.predicted = static_cast<int>(pset.size());
        ds.gold = static_cast<int>(gset.size());
        for (const auto& k : pset) {
            if (gset.count(k)) ++ds.strict_matches;
        }

        std::set<std::string> ptriple, gtriple;
        for (const auto& f : facts) ptriple.insert(canonical_triple(f));
        for (const auto& f : doc.gold) gtriple.insert(canonical_triple(f));
        report.micro_full.matches += ds.strict_matches;
        report.micro_full.predicted += ds.predicted;
        report.micro_full.gold += ds.gold;
        report.micro_triple.predicted += static_cast<int>(ptriple.size());
        report.micro_triple.gold += static_cast<int>(gtriple.size());
        for (const auto& k : ptriple) {
            if (gtriple.count(k)) ++report.micro_triple.matches;
        }

        report.documents.push_back(std::move(ds));
    }

    auto macro = [&](auto pick) {
        Pr m;
        if (report.documents.empty()) return m;
        for (const auto& d : report.documents) {
            const Pr& s = pick(d);
            m.precision += s.precision;
            m.recall += s.recall;
            m.f1 += s.f1;
        }
        double n = static_cast<double>(report.documents.size());
        m.precision /= n;
        m.recall /= n;
        m.f1 /= n;
        return m;
    };
    report.macro_strict = macro([](const DocScores& d) -> const Pr& { return d.strict; });
    report.macro_strict_triple =
        macro([](const DocScores& d) -> const Pr& { return d.strict_triple; });
    report.macro_soft = macro([](const DocScores& d) -> const Pr& { return d.soft; });

    auto micro_pr = [](MicroStrict& m) {
        if (m.predicted == 0 && m.gold == 0) {
            m.scores = {1.0, 1.0, 1.0};
            return;
        }
        if (m.predicted == 0 || m.gold == 0) {
            m.scores = {0.0, 0.0, 0.0};
            return;
        }
        m.scores.precision = static_cast<double>(m.matches) / m.predicted;
        m.scores.recall = static_cast<double>(m.matches) / m.gold;
        m.scores.f1 = f1_of(m.scores.precision, m.scores.recall);
    };
    micro_pr(report.micro_full);
    micro_pr(report.micro_triple);
    return report;
}

namespace {

ordered_json pr_to_json(const Pr& s) {
    return ordered_json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

Pr pr_from_json(const json& j) {
    Pr s;
    s.precision = j.value("precision", 0.0);
    s.recall = j.value("recall", 0.0);
    s.f1 = j.value("f1", 0.0);
    return s;
}

ordered_json micro_to_json(const MicroStrict& m) {
    ordered_json j = pr_to_json(m.scores);
    j["matches"] = m.matches;
    j["predicted"] = m.predicted;
    j["gold"] = m.gold;
    return j;
}

MicroStrict micro_from_json(const json& j) {
    MicroStrict m;
    m.scores = pr_from_json(j);
    m.matches = j.value("matches", 0);
    m.predicted = j.value("predicted", 0);
    m.gold = j.value("gold", 0);
    return m;
}

} // namespace

std::string report_to_json_text(const ScoreReport& report, bool normalize_timestamp) {
    ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "hrkg-score-report";

    ordered_json meta;
    meta["embedder_model"] = report.metadata.embedder_model;
    meta["extractor_model"] = report.metadata.extractor_model;
    meta["corrector_model"] = report.metadata.corrector_model;
    meta["correction_enabled"] = report.metadata.correction_enabled;
    meta["canonicalization_version"] = report.metadata.canonicalization_version;
    meta["timestamp"] = normalize_timestamp ? "1970-01-01T00:00:00Z" : report.metadata.timestamp;
    meta["config_digest"] = report.metadata.config_digest;
    doc["metadata"] = std::move(meta);

    ordered_json macro;
    macro["soft"] = pr_to_json(report.macro_soft);
    macro["strict"] = pr_to_json(report.macro_strict);
    macro["strict_triple"] = pr_to_json(report.macro_strict_triple);
    doc["macro"] = std::move(macro);

    ordered_json micro;
    micro["full"] = micro_to_json(report.micro_full);
    micro["triple"] = micro_to_json(report.micro_triple);
    doc["micro_strict"] = std::move(micro);

    auto docs = ordered_json::array();
    for (const auto& d : report.documents) {
        ordered_json jd;
        jd["doc_id"] = d.doc_id;
        jd["soft"] = pr_to_json(d.soft);
        jd["strict"] = pr_to_json(d.strict);
        jd["strict_triple"] = pr_to_json(d.strict_triple);
        jd["counts"] = ordered_json{
            {"predicted", d.predicted}, {"gold", d.gold}, {"strict_matches", d.strict_matches}};
        docs.push_back(std::move(jd));
    }
    doc["documents"] = std::move(docs);
    return doc.dump(2) + "\n";
}

ScoreReport report_from_json_text(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("score report is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("kind", "") != "hrkg-score-report") {
        throw ParseError("not an hrkg-score-report document");
    }
    for (const char* field : {"metadata", "macro", "micro_strict", "documents"}) {
        if (!doc.contains(field)) {
            throw ParseError("score report is missing \"" + std::string(field) + "\"");
        }
    }
    ScoreReport report;
    try {
    const auto& meta = doc["metadata"];
    report.metadata.embedder_model = meta.value("embedder_model", "");
    report.metadata.extractor_model = meta.value("extractor_model", "");
    report.metadata.corrector_model = meta.value("corrector_model", "");
    report.metadata.correction_enabled = meta.value("correction_enabled", true);
    report.metadata.canonicalization_version = meta.value("canonicalization_version", "1");
    report.metadata.timestamp = meta.value("timestamp", "");
    report.metadata.config_digest = meta.value("config_digest", "");
    report.macro_soft = pr_from_json(doc["macro"]["soft"]);
    report.macro_strict = pr_from_json(doc["macro"]["strict"]);
    report.macro_strict_triple = pr_from_json(doc["macro"]["strict_triple"]);
    report.micro_full = micro_from_json(doc["micro_strict"]["full"]);
    report.micro_triple = micro_from_json(doc["micro_strict"]["triple"]);
    for (const auto& jd : doc["documents"]) {
        DocScores d;
        d.doc_id = jd.value("doc_id", "");
        d.soft = pr_from_json(jd["soft"]);
        d.strict = pr_from_json(jd["strict"]);
        d.strict_triple = pr_from_json(jd["strict_triple"]);
        if (jd.contains("counts")) {
            d.predicted = jd["counts"].value("predicted", 0);
            d.gold = jd["counts"].value("gold", 0);
            d.strict_matches = jd["counts"].value("strict_matches", 0);
        }
        report.documents.push_back(std::move(d));
    }
    } catch (const json::exception& e) {
        throw ParseError(std::string("score report has an unexpected shape: ") + e.what());
    }
    return report;
}

std::string render_report_table(const ScoreReport& report) {
    std::string model = report.metadata.extractor_model;
    if (report.metadata.correction_enabled && !report.metadata.corrector_model.empty()) {
        model += "+" + report.metadata.corrector_model;
    }

    char line[256];
    std::string out;
    out += "Framework  Model                           Metric               Precision  Recall  F1\n";
    auto row = [&](const char* metric, const Pr& s) {
        std::snprintf(line, sizeof(line), "%-9s  %-30s  %-19s  %9.3f  %6.3f  %5.3f\n", "hrkg",
                      model.c_str(), metric, s.precision, s.recall, s.f1);
        out += line;
    };
    row("soft (macro)", report.macro_soft);
    row("strict (macro)", report.macro_strict);
    row("strict-triple", report.macro_strict_triple);
    row("strict (micro)", report.micro_full.scores);
    std::snprintf(line, sizeof(line),
                  "documents: %zu   pooled predicted/gold/matches: %d/%d/%d\n",
                  report.documents.size(), report.micro_full.predicted, report.micro_full.gold,
                  report.micro_full.matches);
    out += line;
    return out;
}

} // namespace hrkg
