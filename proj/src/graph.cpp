#include "hrkg/graph.hpp"

#include <nlohmann/json.hpp>

namespace hrkg {

using nlohmann::json;
using nlohmann::ordered_json;

void HRKGraph::insert(const HyperRelationalFact& fact) {
    if (fact.provenance) source_ids_.insert(fact.provenance->doc_id);
    facts_.emplace(canonicalize_fact(fact), fact); // no overwrite: first-seen wins
}

void HRKGraph::insert(std::span<const HyperRelationalFact> facts) {
    for (const auto& f : facts) insert(f);
}

void HRKGraph::add_source_id(std::string doc_id) {
    source_ids_.insert(std::move(doc_id));
}

bool HRKGraph::same_fact_set(const HRKGraph& other) const {
    if (facts_.size() != other.facts_.size()) return false;
    auto it = facts_.begin();
    auto jt = other.facts_.begin();
    for (; it != facts_.end(); ++it, ++jt) {
        if (it->first != jt->first) return false;
    }
    return true;
}

HRKGraph graph_insert(HRKGraph graph, std::span<const HyperRelationalFact> facts) {
    graph.insert(facts);
    return graph;
}

ExportFormat parse_export_format(std::string_view name) {
    if (name == "canonical-json") return ExportFormat::canonical_json;
    if (name == "flat-tsv") return ExportFormat::flat_tsv;
    throw FormatError("unknown export format \"" + std::string(name) +
                      "\" (expected canonical-json or flat-tsv)");
}

namespace {

std::string export_canonical_json(const HRKGraph& graph) {
    ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "hrkg-graph";
    auto sources = ordered_json::array();
    for (const auto& id : graph.source_ids()) sources.push_back(id);
    doc["source_ids"] = std::move(sources);
    auto facts = ordered_json::array();
    for (const auto& [canonical, fact] : graph.facts()) {
        facts.push_back(fact_to_json(fact, /*with_provenance=*/true));
    }
    doc["facts"] = std::move(facts);
    return doc.dump(2) + "\n";
}

std::string export_flat_tsv(const HRKGraph& graph) {
    // Fields never contain tabs or newlines after whitespace collapse.
    std::string out = "subject\trelation\tobject\tqualifier_key\tqualifier_value\n";
    for (const auto& [canonical, fact] : graph.facts()) {
        if (fact.qualifiers.empty()) {
            out += fact.subject + '\t' + fact.relation + '\t' + fact.object + "\t\t\n";
            continue;
        }
        for (const auto& q : fact.qualifiers) {
            out += fact.subject + '\t' + fact.relation + '\t' + fact.object + '\t' +
                   q.key + '\t' + q.value + '\n';
        }
    }
    return out;
}

} // namespace

std::string export_graph(const HRKGraph& graph, ExportFormat format) {
    switch (format) {
    case ExportFormat::canonical_json: return export_canonical_json(graph);
    case ExportFormat::flat_tsv: return export_flat_tsv(graph);
    }
    throw FormatError("unhandled export format");
}

HRKGraph import_graph(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("graph document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("facts") || !doc["facts"].is_array()) {
        throw ParseError("graph document is missing the \"facts\" array");
    }
    if (!doc.contains("format_version") || doc["format_version"] != "1") {
        throw ParseError("graph document has an unsupported format_version");
    }

    HRKGraph graph;
    const auto& facts = doc["facts"];
    for (size_t i = 0; i < facts.size(); ++i) {
        graph.insert(fact_from_json(facts[i], "facts[" + std::to_string(i) + "]"));
    }
    if (doc.contains("source_ids")) {
        if (!doc["source_ids"].is_array()) {
            throw ParseError("graph document \"source_ids\" is not an array");
        }
        for (const auto& id : doc["source_ids"]) {
            if (!id.is_string()) throw ParseError("graph document source id is not a string");
            graph.add_source_id(id.get<std::string>());
        }
    }
    return graph;
}

} // namespace hrkg
