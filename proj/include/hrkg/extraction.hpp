#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hrkg/corpus.hpp"
#include "hrkg/fact.hpp"
#include "hrkg/gateway.hpp"
#include "hrkg/prompts.hpp"

namespace hrkg {

// The unit the optimizer searches over: instruction + output-schema note +
// ordered few-shot exemplars.
struct PromptSpec {
    std::string instruction;
    std::string schema_note;
    std::vector<Exemplar> exemplars;
    int output_budget = 16;
};

std::string promptspec_to_json_text(const PromptSpec& spec);
PromptSpec promptspec_from_json_text(std::string_view bytes);
void save_promptspec(const std::filesystem::path& path, const PromptSpec& spec);
PromptSpec load_promptspec(const std::filesystem::path& path);

// Stable digest of a spec's content; the optimizer memoizes scores by it.
std::string promptspec_digest(const PromptSpec& spec);

enum class RepairTier { none, fence_strip, json_repair, re_ask };

std::string_view to_string(RepairTier tier);
RepairTier parse_repair_tier(std::string_view name);

struct ParseDiagnostics {
    int attempts = 1;
    RepairTier tier = RepairTier::none;
    int dropped = 0;
    std::map<std::string, int> dropped_reasons;
    bool parse_failed = false;
};

nlohmann::ordered_json diagnostics_to_json(const ParseDiagnostics& d);
ParseDiagnostics diagnostics_from_json(const nlohmann::json& j);

// System message = instruction + schema note ({budget} substituted); user
// message = exemplars as (input, fact array) pairs followed by the target
// text and an output cue. Inserted texts are fenced by sentinel lines that
// are escalated (INPUT, INPUT1, ...) until they collide with nothing in the
// inserted material, so document content cannot terminate the frame early.
ChatRequest render_extraction_prompt(const PromptSpec& spec, const Document& doc,
                                     const PromptBank& bank, const EndpointConfig& role);

// Locates the first parseable balanced JSON array (inside markdown fences
// first, then the whole text), validates elements against the fact schema,
// drops violators with a reason count. Repair tier 2 removes only trailing
// commas and line comments. Throws UnparseableOutputError when nothing
// parses; never throws anything else, for any byte string.
std::pair<std::vector<HyperRelationalFact>, ParseDiagnostics>
parse_llm_output(std::string_view text);

struct ExtractionResult {
    std::vector<HyperRelationalFact> facts;
    ParseDiagnostics diagnostics;
    std::string raw_text;     // verbatim response of the last attempt
    std::string prompt_digest;
};

// Render, call, parse; on unparseable output, re-ask with an appended format
// reminder up to max_attempts, then degrade to an empty fact list (a failed
// document must not abort a corpus run). Facts beyond the output budget are
// truncated in order; provenance is (doc id, attempt).
ExtractionResult extract_document(LlmGateway& gateway, const Document& doc,
                                  const PromptSpec& spec, const PromptBank& bank,
                                  const EndpointConfig& role, int max_attempts);

} // namespace hrkg
