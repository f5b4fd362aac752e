#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "hrkg/fact.hpp"

namespace hrkg {

// Fact set deduplicated by canonical string, plus the set of document ids
// that contributed facts. Values are immutable once built; mutation happens
// by inserting into a copy (or a single-writer accumulator).
class HRKGraph {
public:
    HRKGraph() = default;

    // Dedup by canonical string; first-seen provenance wins, but every
    // provenance doc id is recorded in source_ids.
    void insert(const HyperRelationalFact& fact);
    void insert(std::span<const HyperRelationalFact> facts);

    // Record a contributing document that is not (or no longer) visible as
    // a fact's provenance, e.g. when re-importing an exported graph.
    void add_source_id(std::string doc_id);

    const std::map<std::string, HyperRelationalFact>& facts() const { return facts_; }
    const std::set<std::string>& source_ids() const { return source_ids_; }
    std::size_t size() const { return facts_.size(); }

    // Fact-set equality: same canonical strings.
    bool same_fact_set(const HRKGraph& other) const;

private:
    std::map<std::string, HyperRelationalFact> facts_; // canonical -> fact
    std::set<std::string> source_ids_;
};

HRKGraph graph_insert(HRKGraph graph, std::span<const HyperRelationalFact> facts);

enum class ExportFormat { canonical_json, flat_tsv };

// Throws FormatError on unknown names.
ExportFormat parse_export_format(std::string_view name);

// canonical-json: versioned document, facts sorted by canonical string,
// byte-deterministic for equal graphs. flat-tsv: header row, then one row
// per qualifier with the base triple repeated (qualifier-free facts emit a
// single row with empty qualifier columns).
std::string export_graph(const HRKGraph& graph, ExportFormat format);

// canonical-json only. Throws ParseError on malformed bytes and
// ValidationError (naming the fact index) on invariant violations.
HRKGraph import_graph(std::string_view bytes);

} // namespace hrkg
