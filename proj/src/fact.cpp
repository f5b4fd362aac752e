#include "hrkg/fact.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::json;
using nlohmann::ordered_json;

HyperRelationalFact make_fact(std::string_view subject,
                              std::string_view relation,
                              std::string_view object,
                              std::vector<Qualifier> qualifiers,
                              std::optional<Provenance> provenance) {
    HyperRelationalFact fact;
    fact.subject = text::normalize_field(subject);
    fact.relation = text::normalize_field(relation);
    fact.object = text::normalize_field(object);
    if (fact.subject.empty() || fact.relation.empty() || fact.object.empty()) {
        throw ValidationError("fact has an empty subject, relation, or object");
    }

    for (auto& q : qualifiers) {
        q.key = text::normalize_field(q.key);
        q.value = text::normalize_field(q.value);
        if (q.key.empty() || q.value.empty()) {
            throw ValidationError("fact has a qualifier with an empty key or value");
        }
    }
    std::sort(qualifiers.begin(), qualifiers.end());
    qualifiers.erase(std::unique(qualifiers.begin(), qualifiers.end()), qualifiers.end());
    fact.qualifiers = std::move(qualifiers);
    fact.provenance = std::move(provenance);
    return fact;
}

std::string canonical_triple(const HyperRelationalFact& fact) {
    std::string out = text::escape_field(fact.subject);
    out += " | ";
    out += text::escape_field(fact.relation);
    out += " | ";
    out += text::escape_field(fact.object);
    return out;
}

std::string canonicalize_fact(const HyperRelationalFact& fact) {
    std::string out = canonical_triple(fact);
    for (const auto& q : fact.qualifiers) {
        out += " | ";
        out += text::escape_field(q.key);
        out += '=';
        out += text::escape_field(q.value);
    }
    return out;
}

bool fact_equal_strict(const HyperRelationalFact& a, const HyperRelationalFact& b) {
    return canonicalize_fact(a) == canonicalize_fact(b);
}

namespace {

std::string unescape_field(std::string_view s, std::string_view context) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\') {
            if (i + 1 >= s.size()) {
                throw ParseError("dangling escape in canonical fact " + std::string(context));
            }
            out.push_back(s[++i]);
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

// Split at unescaped occurrences of `sep`; keeps escapes intact for the
// later unescape pass.
std::vector<std::string> split_unescaped(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            current.push_back(s[i]);
            current.push_back(s[i + 1]);
            ++i;
        } else if (s[i] == sep) {
            parts.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(s[i]);
        }
    }
    parts.push_back(std::move(current));
    return parts;
}

} // namespace

HyperRelationalFact parse_canonical_fact(std::string_view canonical) {
    auto segments = split_unescaped(canonical, '|');
    if (segments.size() < 3) {
        throw ParseError("canonical fact needs at least subject | relation | object");
    }
    std::vector<std::string> fields;
    fields.reserve(segments.size());
    for (auto& seg : segments) fields.push_back(text::trim(seg));

    std::vector<Qualifier> qualifiers;
    for (size_t i = 3; i < fields.size(); ++i) {
        auto kv = split_unescaped(fields[i], '=');
        if (kv.size() != 2) {
            throw ParseError("canonical qualifier segment is not key=value");
        }
        qualifiers.push_back({unescape_field(kv[0], "key"), unescape_field(kv[1], "value")});
    }
    return make_fact(unescape_field(fields[0], "subject"),
                     unescape_field(fields[1], "relation"),
                     unescape_field(fields[2], "object"),
                     std::move(qualifiers));
}

ordered_json fact_to_json(const HyperRelationalFact& fact, bool with_provenance) {
    ordered_json j;
    j["subject"] = fact.subject;
    j["relation"] = fact.relation;
    j["object"] = fact.object;
    auto quals = ordered_json::array();
    for (const auto& q : fact.qualifiers) {
        quals.push_back(ordered_json{{"key", q.key}, {"value", q.value}});
    }
    j["qualifiers"] = std::move(quals);
    if (with_provenance) {
        if (fact.provenance) {
            j["provenance"] = ordered_json{{"doc_id", fact.provenance->doc_id},
                                           {"attempt", fact.provenance->attempt}};
        } else {
            j["provenance"] = nullptr;
        }
    }
    return j;
}

HyperRelationalFact fact_from_json(const json& j, const std::string& context) {
    if (!j.is_object()) {
        throw ValidationError(context + ": fact is not a JSON object");
    }
    for (const char* field : {"subject", "relation", "object"}) {
        if (!j.contains(field) || !j[field].is_string()) {
            throw ValidationError(context + ": missing or non-string \"" + field + "\"");
        }
    }
    std::vector<Qualifier> qualifiers;
    if (j.contains("qualifiers") && !j["qualifiers"].is_null()) {
        if (!j["qualifiers"].is_array()) {
            throw ValidationError(context + ": \"qualifiers\" is not an array");
        }
        for (const auto& q : j["qualifiers"]) {
            if (!q.is_object() || !q.contains("key") || !q.contains("value") ||
                !q["key"].is_string() || !q["value"].is_string()) {
                throw ValidationError(context + ": qualifier is not a {key, value} string object");
            }
            qualifiers.push_back({q["key"].get<std::string>(), q["value"].get<std::string>()});
        }
    }
    std::optional<Provenance> prov;
    if (j.contains("provenance") && !j["provenance"].is_null()) {
        const auto& p = j["provenance"];
        if (!p.is_object() || !p.contains("doc_id") || !p["doc_id"].is_string()) {
            throw ValidationError(context + ": provenance must carry a string doc_id");
        }
        Provenance pv;
        pv.doc_id = p["doc_id"].get<std::string>();
        if (p.contains("attempt")) {
            if (!p["attempt"].is_number_integer() || p["attempt"].get<int>() < 0) {
                throw ValidationError(context + ": provenance attempt must be an integer >= 0");
            }
            pv.attempt = p["attempt"].get<int>();
        }
        prov = std::move(pv);
    }
    try {
        return make_fact(j["subject"].get<std::string>(),
                         j["relation"].get<std::string>(),
                         j["object"].get<std::string>(),
                         std::move(qualifiers), std::move(prov));
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    }
}

std::string facts_to_json_text(std::span<const HyperRelationalFact> facts) {
    ordered_json arr = ordered_json::array();
    for (const auto& f : facts) arr.push_back(fact_to_json(f));
    return arr.dump(2);
}

} // namespace hrkg
