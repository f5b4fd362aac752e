#include "hrkg/extraction.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::json;
using nlohmann::ordered_json;

std::string promptspec_to_json_text(const PromptSpec& spec) {
    ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "hrkg-prompt-spec";
    doc["instruction"] = spec.instruction;
    doc["schema_note"] = spec.schema_note;
    doc["output_budget"] = spec.output_budget;
    auto exemplars = ordered_json::array();
    for (const auto& [text, facts] : spec.exemplars) {
        ordered_json e;
        e["text"] = text;
        auto arr = ordered_json::array();
        for (const auto& f : facts) arr.push_back(fact_to_json(f));
        e["facts"] = std::move(arr);
        exemplars.push_back(std::move(e));
    }
    doc["exemplars"] = std::move(exemplars);
    return doc.dump(2) + "\n";
}

PromptSpec promptspec_from_json_text(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("prompt spec is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("kind", "") != "hrkg-prompt-spec") {
        throw ParseError("not an hrkg-prompt-spec document");
    }
    PromptSpec spec;
    if (!doc.contains("instruction") || !doc["instruction"].is_string() ||
        doc["instruction"].get<std::string>().empty()) {
        throw ValidationError("prompt spec needs a non-empty \"instruction\"");
    }
    spec.instruction = doc["instruction"].get<std::string>();
    spec.schema_note = doc.value("schema_note", "");
    spec.output_budget = doc.value("output_budget", 16);
    if (doc.contains("exemplars")) {
        for (size_t i = 0; i < doc["exemplars"].size(); ++i) {
            const auto& e = doc["exemplars"][i];
            const std::string where = "exemplars[" + std::to_string(i) + "]";
            if (!e.is_object() || !e.contains("text") || !e["text"].is_string()) {
                throw ParseError(where + ": needs a string \"text\"");
            }
            std::vector<HyperRelationalFact> facts;
            if (e.contains("facts")) {
                for (size_t g = 0; g < e["facts"].size(); ++g) {
                    facts.push_back(
                        fact_from_json(e["facts"][g], where + ".facts[" + std::to_string(g) + "]"));
                }
            }
            spec.exemplars.emplace_back(e["text"].get<std::string>(), std::move(facts));
        }
    }
    return spec;
}

void save_promptspec(const std::filesystem::path& path, const PromptSpec& spec) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write prompt spec: " + path.string());
    out << promptspec_to_json_text(spec);
}

PromptSpec load_promptspec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open prompt spec: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return promptspec_from_json_text(buf.str());
}

std::string promptspec_digest(const PromptSpec& spec) {
    return text::sha256_hex(promptspec_to_json_text(spec));
}

std::string_view to_string(RepairTier tier) {
    switch (tier) {
    case RepairTier::none: return "none";
    case RepairTier::fence_strip: return "fence-strip";
    case RepairTier::json_repair: return "json-repair";
    case RepairTier::re_ask: return "re-ask";
    }
    return "?";
}

RepairTier parse_repair_tier(std::string_view name) {
    if (name == "none") return RepairTier::none;
    if (name == "fence-strip") return RepairTier::fence_strip;
    if (name == "json-repair") return RepairTier::json_repair;
    if (name == "re-ask") return RepairTier::re_ask;
    throw ParseError("unknown repair tier \"" + std::string(name) + "\"");
}

ordered_json diagnostics_to_json(const ParseDiagnostics& d) {
    ordered_json j;
    j["attempts"] = d.attempts;
    j["repair_tier"] = std::string(to_string(d.tier));
    j["dropped"] = d.dropped;
    j["dropped_reasons"] = d.dropped_reasons;
    j["parse_failed"] = d.parse_failed;
    return j;
}

ParseDiagnostics diagnostics_from_json(const json& j) {
    ParseDiagnostics d;
    d.attempts = j.value("attempts", 1);
    d.tier = parse_repair_tier(j.value("repair_tier", "none"));
    d.dropped = j.value("dropped", 0);
    if (j.contains("dropped_reasons")) {
        for (auto& [key, value] : j["dropped_reasons"].items()) {
            d.dropped_reasons[key] = value.get<int>();
        }
    }
    d.parse_failed = j.value("parse_failed", false);
    return d;
}

ChatRequest render_extraction_prompt(const PromptSpec& spec, const Document& doc,
                                     const PromptBank& bank, const EndpointConfig& role) {
    std::vector<std::string> inserted;
    for (const auto& [extext, facts] : spec.exemplars) inserted.push_back(extext);
    inserted.push_back(doc.text);
    auto [open, close] = choose_sentinels(inserted);

    std::string exemplars_block;
    for (const auto& [extext, facts] : spec.exemplars) {
        exemplars_block += "Example input:\n";
        exemplars_block += open + "\n" + extext + "\n" + close + "\n";
        exemplars_block += "Example facts:\n";
        exemplars_block += facts_to_json_text(facts);
        exemplars_block += "\n\n";
    }

    std::string framed_input = open + "\n" + doc.text + "\n" + close;

    std::string user = render_template(bank.extraction_user_template,
                                       {{"instruction", spec.instruction},
                                        {"exemplars", exemplars_block},
                                        {"input", framed_input}});

    std::string schema = render_template(spec.schema_note,
                                         {{"budget", std::to_string(spec.output_budget)}});

    ChatRequest request;
    request.config = role;
    request.system = spec.instruction + (schema.empty() ? "" : "\n\n" + schema);
    request.user = std::move(user);
    return request;
}

namespace {

// Candidate span of a balanced JSON array starting at `start` (which must
// index a '['), string literals respected. nullopt when no balanced close.
std::optional<std::string_view> balanced_array_at(std::string_view text, size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
            if (depth == 0) return text.substr(start, i - start + 1);
            if (depth < 0) return std::nullopt;
        }
    }
    return std::nullopt;
}

// Tier-2 mechanical repair, deliberately conservative: line comments and
// trailing commas only. Anything worse propagates to a re-ask.
std::string repair_json_text(std::string_view s) {
    // pass 1: strip // line comments outside strings
    std::string no_comments;
    no_comments.reserve(s.size());
    bool in_string = false, escaped = false;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            no_comments.push_back(c);
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            no_comments.push_back(c);
        } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
            while (i < s.size() && s[i] != '\n') ++i;
            if (i < s.size()) no_comments.push_back('\n');
        } else {
            no_comments.push_back(c);
        }
    }

    // pass 2: drop commas whose next non-whitespace token closes a scope
    std::string out;
    out.reserve(no_comments.size());
    in_string = false;
    escaped = false;
    for (size_t i = 0; i < no_comments.size(); ++i) {
        char c = no_comments[i];
        if (in_string) {
            out.push_back(c);
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            out.push_back(c);
            continue;
        }
        if (c == ',') {
            size_t j = i + 1;
            while (j < no_comments.size() &&
                   (no_comments[j] == ' ' || no_comments[j] == '\t' || no_comments[j] == '\n' ||
                    no_comments[j] == '\r')) {
                ++j;
            }
            if (j < no_comments.size() && (no_comments[j] == ']' || no_comments[j] == '}')) {
                continue; // trailing comma
            }
        }
        out.push_back(c);
    }
    return out;
}

struct FoundArray {
    json value;
    bool repaired = false;
};

// First parseable balanced array in the region, trying plain parse before
// the tier-2 repair at each candidate.
std::optional<FoundArray> find_parseable_array(std::string_view region) {
    for (size_t pos = region.find('['); pos != std::string_view::npos;
         pos = region.find('[', pos + 1)) {
        auto span = balanced_array_at(region, pos);
        if (!span) continue;
        {
            json parsed = json::parse(*span, nullptr, false);
            if (!parsed.is_discarded() && parsed.is_array()) {
                return FoundArray{std::move(parsed), false};
            }
        }
        {
            json parsed = json::parse(repair_json_text(*span), nullptr, false);
            if (!parsed.is_discarded() && parsed.is_array()) {
                return FoundArray{std::move(parsed), true};
            }
        }
    }
    return std::nullopt;
}

// Closed markdown code fences, in order of appearance.
std::vector<std::string_view> fenced_regions(std::string_view text) {
    std::vector<std::string_view> regions;
    size_t pos = 0;
    while (true) {
        size_t open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        size_t content = open + 3;
        // skip an optional language tag up to end of line
        size_t eol = text.find('\n', content);
        size_t close = text.find("```", content);
        if (close == std::string_view::npos) break;
        size_t body_start = (eol != std::string_view::npos && eol < close) ? eol + 1 : content;
        if (body_start <= close) {
            regions.push_back(text.substr(body_start, close - body_start));
        }
        pos = close + 3;
    }
    return regions;
}

void element_to_fact(const json& element, std::vector<HyperRelationalFact>& facts,
                     ParseDiagnostics& diag) {
    auto drop = [&](const char* reason) {
        ++diag.dropped;
        ++diag.dropped_reasons[reason];
    };

    if (!element.is_object()) {
        drop("not-an-object");
        return;
    }
    for (const char* field : {"subject", "relation", "object"}) {
        if (!element.contains(field) || !element[field].is_string()) {
            drop("missing-field");
            return;
        }
    }
    std::vector<Qualifier> qualifiers;
    if (element.contains("qualifiers") && !element["qualifiers"].is_null()) {
        if (!element["qualifiers"].is_array()) {
            drop("bad-qualifiers");
            return;
        }
        for (const auto& q : element["qualifiers"]) {
            if (!q.is_object() || !q.contains("key") || !q.contains("value") ||
                !q["key"].is_string() || !q["value"].is_string()) {
                drop("bad-qualifiers");
                return;
            }
            qualifiers.push_back({q["key"].get<std::string>(), q["value"].get<std::string>()});
        }
    }
    try {
        facts.push_back(make_fact(element["subject"].get<std::string>(),
                                  element["relation"].get<std::string>(),
                                  element["object"].get<std::string>(), std::move(qualifiers)));
    } catch (const ValidationError&) {
        drop("empty-field");
    }
}

} // namespace

std::pair<std::vector<HyperRelationalFact>, ParseDiagnostics>
parse_llm_output(std::string_view text_in) {
    std::optional<FoundArray> found;
    bool from_fence = false;

    for (auto region : fenced_regions(text_in)) {
        found = find_parseable_array(region);
        if (found) {
            from_fence = true;
            break;
        }
    }
    if (!found) found = find_parseable_array(text_in);
    if (!found) throw UnparseableOutputError(std::string(text_in));

    ParseDiagnostics diag;
    if (found->repaired) {
        diag.tier = RepairTier::json_repair;
    } else if (from_fence) {
        diag.tier = RepairTier::fence_strip;
    } else {
        diag.tier = RepairTier::none;
    }

    std::vector<HyperRelationalFact> facts;
    for (const auto& element : found->value) {
        element_to_fact(element, facts, diag);
    }
    return {std::move(facts), std::move(diag)};
}

ExtractionResult extract_document(LlmGateway& gateway, const Document& doc,
                                  const PromptSpec& spec, const PromptBank& bank,
                                  const EndpointConfig& role, int max_attempts) {
    const int attempts_allowed = std::max(max_attempts, 1);
    ChatRequest base = render_extraction_prompt(spec, doc, bank, role);

    ExtractionResult result;
    for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
        ChatRequest request = base;
        if (attempt > 1) {
            request.user += "\n\n" + bank.reask_reminder;
        }
        result.prompt_digest = chat_cache_key(request);
        result.raw_text = gateway.chat(request);
        try {
            auto [facts, diag] = parse_llm_output(result.raw_text);
            diag.attempts = attempt;
            if (attempt > 1) diag.tier = RepairTier::re_ask;
            if (spec.output_budget > 0 &&
                facts.size() > static_cast<size_t>(spec.output_budget)) {
                facts.resize(static_cast<size_t>(spec.output_budget));
            }
            for (auto& f : facts) f.provenance = Provenance{doc.id, attempt};
            result.facts = std::move(facts);
            result.diagnostics = std::move(diag);
            return result;
        } catch (const UnparseableOutputError&) {
            // fall through to the re-ask (or the failure diagnostics below)
        }
    }

    result.facts.clear();
    result.diagnostics = ParseDiagnostics{};
    result.diagnostics.attempts = attempts_allowed;
    result.diagnostics.tier = attempts_allowed > 1 ? RepairTier::re_ask : RepairTier::json_repair;
    result.diagnostics.parse_failed = true;
    return result;
}

} // namespace hrkg
