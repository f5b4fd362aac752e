#include "hrkg/correction.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::ordered_json;

GroundingMode parse_grounding_mode(std::string_view name) {
    if (name == "off") return GroundingMode::off;
    if (name == "warn") return GroundingMode::warn;
    if (name == "strict") return GroundingMode::strict;
    throw ConfigError("unknown grounding mode \"" + std::string(name) + "\"");
}

std::string_view to_string(GroundingMode mode) {
    switch (mode) {
    case GroundingMode::off: return "off";
    case GroundingMode::warn: return "warn";
    case GroundingMode::strict: return "strict";
    }
    return "?";
}

ordered_json correction_diagnostics_to_json(const CorrectionDiagnostics& d) {
    ordered_json j;
    j["kept"] = d.kept;
    j["edited"] = d.edited;
    j["added"] = d.added;
    j["dropped_additions"] = d.dropped_additions;
    j["dropped_grounding"] = d.dropped_grounding;
    j["grounding_violations"] = d.grounding_violations;
    j["fail_open"] = d.fail_open;
    j["parse"] = diagnostics_to_json(d.parse);
    return j;
}

ChatRequest render_correction_prompt(const Document& doc,
                                     std::span<const HyperRelationalFact> facts,
                                     const PromptBank& bank, const EndpointConfig& role) {
    auto [open, close] = choose_sentinels({doc.text});

    ChatRequest request;
    request.config = role;
    request.system = bank.correction_system;
    request.user = render_template(bank.correction_user_template,
                                   {{"input", open + "\n" + doc.text + "\n" + close},
                                    {"facts", facts_to_json_text(facts)}});
    return request;
}

namespace {

bool is_edit_of_input(const HyperRelationalFact& fact,
                      std::span<const HyperRelationalFact> inputs) {
    for (const auto& in : inputs) {
        if ((fact.subject == in.subject && fact.relation == in.relation) ||
            (fact.relation == in.relation && fact.object == in.object)) {
            return true;
        }
    }
    return false;
}

} // namespace

CorrectionResult correct_facts(LlmGateway& gateway, const Document& doc,
                               std::span<const HyperRelationalFact> facts,
                               const CorrectionPolicy& policy, const PromptBank& bank,
                               const EndpointConfig& role) {
    ChatRequest request = render_correction_prompt(doc, facts, bank, role);

    CorrectionResult result;
    result.prompt_digest = chat_cache_key(request);
    result.raw_text = gateway.chat(request);

    std::vector<HyperRelationalFact> corrected;
    try {
        auto [parsed, diag] = parse_llm_output(result.raw_text);
        corrected = std::move(parsed);
        result.diagnostics.parse = std::move(diag);
    } catch (const UnparseableOutputError&) {
        result.diagnostics.fail_open = true;
        result.diagnostics.parse.parse_failed = true;
        result.diagnostics.kept = static_cast<int>(facts.size());
        result.facts.assign(facts.begin(), facts.end());
        return result;
    }

    std::set<std::string> input_full;
    std::set<std::string> input_triples;
    for (const auto& f : facts) {
        input_full.insert(canonicalize_fact(f));
        input_triples.insert(canonical_triple(f));
    }

    std::vector<HyperRelationalFact> kept_facts;
    for (auto& fact : corrected) {
        fact.provenance = Provenance{doc.id, 1};

        bool identical = input_full.count(canonicalize_fact(fact)) > 0;
        bool same_triple = input_triples.count(canonical_triple(fact)) > 0;
        bool edit = same_triple || (policy.edit_heuristic && is_edit_of_input(fact, facts));

        if (identical) {
            ++result.diagnostics.kept;
        } else if (edit) {
            ++result.diagnostics.edited;
        } else if (policy.allow_additions) {
            ++result.diagnostics.added;
        } else {
            ++result.diagnostics.dropped_additions;
            continue;
        }

        if (policy.grounding != GroundingMode::off) {
            std::string missing;
            if (!text::contains_ci(doc.text, fact.subject)) missing = fact.subject;
            else if (!text::contains_ci(doc.text, fact.object)) missing = fact.object;
            if (!missing.empty()) {
                result.diagnostics.grounding_violations.push_back(missing);
                if (policy.grounding == GroundingMode::strict) {
                    ++result.diagnostics.dropped_grounding;
                    continue;
                }
            }
        }
        kept_facts.push_back(std::move(fact));
    }

    if (!policy.allow_deletions) {
        std::set<std::string> output_triples;
        for (const auto& f : kept_facts) output_triples.insert(canonical_triple(f));
        for (const auto& f : facts) {
            if (!output_triples.count(canonical_triple(f))) {
                kept_facts.push_back(f); // deletions disabled: restore in input order
            }
        }
    }

    result.facts = std::move(kept_facts);
    return result;
}

} // namespace hrkg
