#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrkg/corpus.hpp"
#include "hrkg/extraction.hpp"
#include "hrkg/fact.hpp"
#include "hrkg/gateway.hpp"
#include "hrkg/prompts.hpp"

namespace hrkg {

enum class GroundingMode { off, warn, strict };

GroundingMode parse_grounding_mode(std::string_view name);
std::string_view to_string(GroundingMode mode);

struct CorrectionPolicy {
    GroundingMode grounding = GroundingMode::warn;
    bool allow_additions = false;
    bool allow_deletions = true;
    // When additions are disallowed, a corrected fact sharing subject+relation
    // or relation+object with some input fact still counts as an edit of it.
    bool edit_heuristic = true;
};

struct CorrectionDiagnostics {
    int kept = 0;              // identical to an input fact
    int edited = 0;            // same base triple or edit-heuristic match
    int added = 0;             // new fact allowed through
    int dropped_additions = 0; // new fact removed by policy
    int dropped_grounding = 0;
    std::vector<std::string> grounding_violations;
    bool fail_open = false; // corrector output unparseable, input passed through
    ParseDiagnostics parse;
};

nlohmann::ordered_json correction_diagnostics_to_json(const CorrectionDiagnostics& d);

// User message carries the sentinel-framed source text, the current facts as
// the canonical JSON array, and the fix-and-return-everything instruction.
ChatRequest render_correction_prompt(const Document& doc,
                                     std::span<const HyperRelationalFact> facts,
                                     const PromptBank& bank, const EndpointConfig& role);

struct CorrectionResult {
    std::vector<HyperRelationalFact> facts;
    CorrectionDiagnostics diagnostics;
    std::string raw_text;
    std::string prompt_digest;
};

// Calls the corrector, parses its array, then applies the policy. On
// unparseable corrector output the input facts pass through unchanged
// (fail-open): a broken correction pass must not erase extraction work.
CorrectionResult correct_facts(LlmGateway& gateway, const Document& doc,
                               std::span<const HyperRelationalFact> facts,
                               const CorrectionPolicy& policy, const PromptBank& bank,
                               const EndpointConfig& role);

} // namespace hrkg
