#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hrkg/errors.hpp"

namespace hrkg {

// One qualifier relation attached to a base triple, e.g. ("start time", "2009").
struct Qualifier {
    std::string key;
    std::string value;

    auto operator<=>(const Qualifier&) const = default;
};

struct Provenance {
    std::string doc_id;
    int attempt = 0;

    auto operator<=>(const Provenance&) const = default;
};

// One hyperedge: a base triple plus zero or more qualifier nodes.
// Fields are stored normalized (NFC, trimmed, whitespace-collapsed);
// qualifiers are sorted by (key, value) with duplicates removed.
// Build instances through make_fact so the invariants hold.
struct HyperRelationalFact {
    std::string subject;
    std::string relation;
    std::string object;
    std::vector<Qualifier> qualifiers;
    std::optional<Provenance> provenance;
};

// Normalizing constructor. Throws ValidationError if subject, relation,
// object, or any qualifier key/value is empty after normalization.
HyperRelationalFact make_fact(std::string_view subject,
                              std::string_view relation,
                              std::string_view object,
                              std::vector<Qualifier> qualifiers = {},
                              std::optional<Provenance> provenance = std::nullopt);

// Deterministic serialization:
//   subject | relation | object | key1=value1 | key2=value2
// with `\`, `|`, `=` backslash-escaped inside fields. A fact without
// qualifiers ends after the object. Provenance is not part of the string.
std::string canonicalize_fact(const HyperRelationalFact& fact);

// Same layout restricted to the base triple; used for triple-only matching.
std::string canonical_triple(const HyperRelationalFact& fact);

bool fact_equal_strict(const HyperRelationalFact& a, const HyperRelationalFact& b);

// Inverse of canonicalize_fact. Throws ParseError on malformed input.
// Exists so tests can check the escaping round trip; not used on the hot path.
HyperRelationalFact parse_canonical_fact(std::string_view canonical);

// JSON shape shared by exports, prompts, and the output parser:
//   {"subject": s, "relation": r, "object": o,
//    "qualifiers": [{"key": k, "value": v}, ...]}
// Provenance is appended only when with_provenance is set.
nlohmann::ordered_json fact_to_json(const HyperRelationalFact& fact,
                                    bool with_provenance = false);

// Strict converter used by graph/corpus imports. context names the fact in
// error messages, e.g. "facts[3]". Throws ValidationError / ParseError.
HyperRelationalFact fact_from_json(const nlohmann::json& j, const std::string& context);

// Pretty JSON array of facts, the exact text placed into prompts.
std::string facts_to_json_text(std::span<const HyperRelationalFact> facts);

} // namespace hrkg
