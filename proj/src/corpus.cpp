#include "hrkg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hrkg/errors.hpp"
#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string default_doc_id(size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "doc-%06zu", index);
    return buf;
}

// head/tail/qualifier spans: [start, end) token indices. Accepts either a
// bare two-int array or an object with a "span" member, which covers the
// shapes seen in HyperRED releases.
std::pair<int, int> read_span(const json& node, const std::string& context) {
    const json* arr = &node;
    if (node.is_object()) {
        if (!node.contains("span")) {
            throw ParseError(context + ": span object has no \"span\" member");
        }
        arr = &node["span"];
    }
    if (!arr->is_array() || arr->size() != 2 || !(*arr)[0].is_number_integer() ||
        !(*arr)[1].is_number_integer()) {
        throw ParseError(context + ": span is not a [start, end] integer pair");
    }
    return {(*arr)[0].get<int>(), (*arr)[1].get<int>()};
}

std::string join_span(const std::vector<std::string>& tokens, std::pair<int, int> span,
                      const std::string& context) {
    auto [start, end] = span;
    if (start < 0 || end > static_cast<int>(tokens.size()) || start >= end) {
        throw ValidationError(context + ": token span [" + std::to_string(start) + ", " +
                              std::to_string(end) + ") is out of range for " +
                              std::to_string(tokens.size()) + " tokens");
    }
    std::string out = tokens[static_cast<size_t>(start)];
    for (int i = start + 1; i < end; ++i) {
        out += ' ';
        out += tokens[static_cast<size_t>(i)];
    }
    return out;
}

Document record_to_document(const json& record, size_t index) {
    const std::string where = "record " + std::to_string(index + 1);
    if (!record.is_object()) throw ParseError(where + ": not a JSON object");
    if (!record.contains("tokens") || !record["tokens"].is_array()) {
        throw ParseError(where + ": missing \"tokens\" array");
    }

    Document doc;
    std::vector<std::string> tokens;
    tokens.reserve(record["tokens"].size());
    for (const auto& t : record["tokens"]) {
        if (!t.is_string()) throw ParseError(where + ": token is not a string");
        tokens.push_back(t.get<std::string>());
    }
    if (tokens.empty()) throw ParseError(where + ": empty token list");

    doc.id = record.contains("id") && record["id"].is_string()
                 ? record["id"].get<std::string>()
                 : default_doc_id(index);

    // Detokenization rule: plain space join, so gold surface strings and
    // prompt text stay mutually consistent.
    std::string joined = tokens[0];
    for (size_t i = 1; i < tokens.size(); ++i) {
        joined += ' ';
        joined += tokens[i];
    }
    doc.text = joined;
    doc.tokens = std::move(tokens);

    if (record.contains("relations")) {
        if (!record["relations"].is_array()) {
            throw ParseError(where + ": \"relations\" is not an array");
        }
        size_t rel_index = 0;
        for (const auto& rel : record["relations"]) {
            const std::string rwhere = where + ", relation " + std::to_string(rel_index + 1);
            ++rel_index;
            if (!rel.is_object()) throw ParseError(rwhere + ": not a JSON object");
            for (const char* field : {"head", "tail"}) {
                if (!rel.contains(field)) {
                    throw ParseError(rwhere + ": missing \"" + std::string(field) + "\"");
                }
            }
            if (!rel.contains("label") || !rel["label"].is_string()) {
                throw ParseError(rwhere + ": missing or non-string \"label\"");
            }
            std::string subject =
                join_span(*doc.tokens, read_span(rel["head"], rwhere + " head"), rwhere + " head");
            std::string object =
                join_span(*doc.tokens, read_span(rel["tail"], rwhere + " tail"), rwhere + " tail");

            std::vector<Qualifier> qualifiers;
            if (rel.contains("qualifiers")) {
                if (!rel["qualifiers"].is_array()) {
                    throw ParseError(rwhere + ": \"qualifiers\" is not an array");
                }
                for (const auto& q : rel["qualifiers"]) {
                    if (!q.is_object() || !q.contains("label") || !q["label"].is_string() ||
                        !q.contains("span")) {
                        throw ParseError(rwhere + ": qualifier needs a \"label\" and a \"span\"");
                    }
                    qualifiers.push_back(
                        {q["label"].get<std::string>(),
                         join_span(*doc.tokens, read_span(q["span"], rwhere + " qualifier"),
                                   rwhere + " qualifier")});
                }
            }
            doc.gold.push_back(make_fact(subject, rel["label"].get<std::string>(), object,
                                         std::move(qualifiers), Provenance{doc.id, 0}));
        }
    }
    return doc;
}

} // namespace

std::vector<Document> parse_hyperred(std::string_view data, const LoadOptions& opts) {
    std::vector<json> records;

    // Autodetect: a single JSON array, or one record per line.
    std::string_view trimmed = data;
    size_t first = trimmed.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    if (trimmed[first] == '[') {
        json arr;
        try {
            arr = json::parse(data);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("dataset is not valid JSON: ") + e.what());
        }
        if (!arr.is_array()) throw ParseError("top-level dataset value is not an array");
        for (auto& r : arr) records.push_back(std::move(r));
    } else {
        std::istringstream in{std::string(data)};
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (text::trim(line).empty()) continue;
            try {
                records.push_back(json::parse(line));
            } catch (const json::parse_error& e) {
                if (opts.lenient) continue;
                throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
            }
        }
    }

    std::vector<Document> docs;
    docs.reserve(records.size());
    std::vector<std::string> seen_ids;
    for (size_t i = 0; i < records.size(); ++i) {
        try {
            docs.push_back(record_to_document(records[i], i));
        } catch (const Error&) {
            if (opts.lenient) continue;
            throw;
        }
    }
    for (const auto& d : docs) seen_ids.push_back(d.id);
    std::sort(seen_ids.begin(), seen_ids.end());
    if (std::adjacent_find(seen_ids.begin(), seen_ids.end()) != seen_ids.end()) {
        throw ValidationError("dataset contains duplicate document ids");
    }
    return docs;
}

std::vector<Document> load_hyperred(const std::filesystem::path& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_hyperred(buf.str(), opts);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

DatasetSplit split_dataset(std::vector<Document> docs, std::uint64_t seed,
                           std::array<double, 3> fractions) {
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw ValidationError("split fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split fractions must sum to 1.0");
    }

    // Hand-rolled Fisher-Yates on top of mt19937_64 so the permutation is
    // identical on every platform (std::shuffle is not pinned down).
    std::mt19937_64 rng(seed);
    for (size_t i = docs.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng() % i);
        std::swap(docs[i - 1], docs[j]);
    }

    const size_t n = docs.size();
    size_t n_train = static_cast<size_t>(fractions[0] * static_cast<double>(n));
    size_t n_dev = static_cast<size_t>(fractions[1] * static_cast<double>(n));
    size_t n_test = static_cast<size_t>(fractions[2] * static_cast<double>(n));
    n_train += n - n_train - n_dev - n_test; // remainder to train

    DatasetSplit split;
    split.train.assign(docs.begin(), docs.begin() + static_cast<long>(n_train));
    split.dev.assign(docs.begin() + static_cast<long>(n_train),
                     docs.begin() + static_cast<long>(n_train + n_dev));
    split.test.assign(docs.begin() + static_cast<long>(n_train + n_dev), docs.end());
    return split;
}

ExemplarStrategy parse_exemplar_strategy(std::string_view name) {
    if (name == "first-k") return ExemplarStrategy::first_k;
    if (name == "seeded-random") return ExemplarStrategy::seeded_random;
    if (name == "qualifier-rich") return ExemplarStrategy::qualifier_rich;
    throw ConfigError("unknown exemplar strategy \"" + std::string(name) + "\"");
}

std::string_view to_string(ExemplarStrategy strategy) {
    switch (strategy) {
    case ExemplarStrategy::first_k: return "first-k";
    case ExemplarStrategy::seeded_random: return "seeded-random";
    case ExemplarStrategy::qualifier_rich: return "qualifier-rich";
    }
    return "?";
}

std::vector<Exemplar> select_exemplars(std::span<const Document> train, std::size_t k,
                                       ExemplarStrategy strategy, std::uint64_t seed) {
    std::vector<const Document*> eligible;
    for (const auto& d : train) {
        if (!d.gold.empty()) eligible.push_back(&d);
    }

    switch (strategy) {
    case ExemplarStrategy::first_k:
        break;
    case ExemplarStrategy::seeded_random: {
        std::mt19937_64 rng(seed);
        for (size_t i = eligible.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(rng() % i);
            std::swap(eligible[i - 1], eligible[j]);
        }
        break;
    }
    case ExemplarStrategy::qualifier_rich: {
        auto qualifier_count = [](const Document* d) {
            size_t total = 0;
            for (const auto& f : d->gold) total += f.qualifiers.size();
            return total;
        };
        std::stable_sort(eligible.begin(), eligible.end(),
                         [&](const Document* a, const Document* b) {
                             size_t qa = qualifier_count(a), qb = qualifier_count(b);
                             if (qa != qb) return qa > qb;
                             return a->id < b->id;
                         });
        break;
    }
    }

    std::vector<Exemplar> out;
    for (const Document* d : eligible) {
        if (out.size() >= k) break;
        out.emplace_back(d->text, d->gold);
    }
    return out;
}

std::string corpus_to_json(std::span<const Document> docs) {
    ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "hrkg-corpus";
    auto arr = ordered_json::array();
    for (const auto& d : docs) {
        ordered_json jd;
        jd["id"] = d.id;
        jd["text"] = d.text;
        if (d.tokens) {
            jd["tokens"] = *d.tokens;
        } else {
            jd["tokens"] = nullptr;
        }
        auto gold = ordered_json::array();
        for (const auto& f : d.gold) gold.push_back(fact_to_json(f));
        jd["gold"] = std::move(gold);
        arr.push_back(std::move(jd));
    }
    doc["documents"] = std::move(arr);
    return doc.dump(2) + "\n";
}

std::vector<Document> corpus_from_json(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("corpus document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("kind", "") != "hrkg-corpus" ||
        !doc.contains("documents") || !doc["documents"].is_array()) {
        throw ParseError("not an hrkg-corpus document");
    }
    if (doc.value("format_version", "") != "1") {
        throw ParseError("corpus document has an unsupported format_version");
    }

    std::vector<Document> docs;
    std::vector<std::string> ids;
    for (size_t i = 0; i < doc["documents"].size(); ++i) {
        const auto& jd = doc["documents"][i];
        const std::string where = "documents[" + std::to_string(i) + "]";
        if (!jd.is_object() || !jd.contains("id") || !jd["id"].is_string() ||
            !jd.contains("text") || !jd["text"].is_string()) {
            throw ParseError(where + ": needs string \"id\" and \"text\"");
        }
        Document d;
        d.id = jd["id"].get<std::string>();
        d.text = jd["text"].get<std::string>();
        if (d.text.empty()) throw ValidationError(where + ": empty text");
        if (jd.contains("tokens") && !jd["tokens"].is_null()) {
            if (!jd["tokens"].is_array()) throw ParseError(where + ": \"tokens\" is not an array");
            std::vector<std::string> toks;
            for (const auto& t : jd["tokens"]) {
                if (!t.is_string()) throw ParseError(where + ": token is not a string");
                toks.push_back(t.get<std::string>());
            }
            d.tokens = std::move(toks);
        }
        if (jd.contains("gold")) {
            if (!jd["gold"].is_array()) throw ParseError(where + ": \"gold\" is not an array");
            for (size_t g = 0; g < jd["gold"].size(); ++g) {
                auto fact = fact_from_json(jd["gold"][g],
                                           where + ".gold[" + std::to_string(g) + "]");
                fact.provenance = Provenance{d.id, 0};
                d.gold.push_back(std::move(fact));
            }
        }
        ids.push_back(d.id);
        docs.push_back(std::move(d));
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw ValidationError("corpus contains duplicate document ids");
    }
    return docs;
}

void save_corpus(const std::filesystem::path& path, std::span<const Document> docs) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write corpus file: " + path.string());
    out << corpus_to_json(docs);
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open corpus file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return corpus_from_json(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

} // namespace hrkg
