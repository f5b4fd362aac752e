// hrkg-mockgen: regenerates the bundled mock fixture files.
//
// The pipeline's mock mode replays responses keyed by prompt digest, so the
// fixtures must be rebuilt whenever prompt rendering, the bundled corpus, or
// the mock configs change:
//
//   hrkg-mockgen --config configs/mock_run.json --mode run --output data/fixtures_run.json
//   hrkg-mockgen --config configs/mock_opt.json --mode opt --output data/fixtures_opt.json
//
// "run" mode scripts one deliberate response shape per document (clean JSON,
// fenced, prose-wrapped, trailing commas, schema violations, re-ask garbage)
// plus the matching corrector replies. "opt" mode runs the real optimizer
// with a recording gateway that synthesizes extractor replies from the doc's
// gold facts, degraded deterministically by the request digest.

#include <algorithm>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hrkg/config.hpp"
#include "hrkg/correction.hpp"
#include "hrkg/extraction.hpp"
#include "hrkg/pipeline.hpp"
#include "hrkg/text.hpp"

namespace {

using namespace hrkg;

struct ExtractorPlan {
    std::string attempt1;
    std::string attempt2; // empty: single attempt
};

std::vector<HyperRelationalFact> strip_provenance(std::vector<HyperRelationalFact> facts) {
    for (auto& f : facts) f.provenance.reset();
    return facts;
}

ExtractorPlan extractor_plan(std::size_t index, const std::vector<HyperRelationalFact>& gold) {
    auto clean = facts_to_json_text(gold);
    switch (index % 10) {
    case 0: return {clean, ""};
    case 1: return {"```json\n" + clean + "\n```", ""};
    case 2: return {"Here are the facts I found:\n" + clean + "\nHope this helps!", ""};
    case 3: return {"[]", ""};
    case 4: {
        // array-level trailing comma
        std::string text = clean;
        auto pos = text.rfind(']');
        if (pos != std::string::npos) text.insert(pos, ",");
        return {text, ""};
    }
    case 5: {
        // one schema-violating element the parser must drop
        std::string text = clean;
        auto pos = text.rfind(']');
        if (pos != std::string::npos) {
            text.insert(pos, gold.empty() ? "{\"note\": \"nothing here\"}"
                                          : ",\n  {\"note\": \"nothing here\"}");
        }
        return {text, ""};
    }
    case 6: {
        // wrong object entity; the corrector puts it right
        auto facts = gold;
        if (!facts.empty()) {
            facts[0] = make_fact(facts[0].subject, facts[0].relation, "Mars",
                                 facts[0].qualifiers);
        }
        return {facts_to_json_text(facts), ""};
    }
    case 7: {
        // hallucinated extra fact; the corrector deletes it
        auto facts = gold;
        facts.push_back(make_fact("Brazil", "capital of", "Brasilia"));
        return {facts_to_json_text(facts), ""};
    }
    case 8: return {"I could not find any facts in this text.", "[]"};
    default:
        return {"Sorry, the output format escaped me: subject=?",
                "```json\n" + clean + "\n```"};
    }
}

std::vector<HyperRelationalFact> corrector_reply(std::size_t index,
                                                 const std::vector<HyperRelationalFact>& extracted,
                                                 const std::vector<HyperRelationalFact>& gold) {
    switch (index % 10) {
    case 5: {
        // drops one qualifier, leaving a triple-only match
        auto facts = extracted;
        if (!facts.empty() && !facts[0].qualifiers.empty()) {
            auto quals = facts[0].qualifiers;
            quals.pop_back();
            facts[0] = make_fact(facts[0].subject, facts[0].relation, facts[0].object, quals);
        }
        return facts;
    }
    case 6: return gold; // fixes the wrong entity
    case 7: return gold; // deletes the hallucination
    default: return extracted;
    }
}

void generate_run_fixtures(PipelineContext& ctx, const std::filesystem::path& output) {
    RunOptions options;
    auto docs = docs_for(ctx, options);
    if (docs.empty()) throw ConfigError("mock corpus test split is empty");
    PromptSpec spec = resolve_promptspec(ctx);

    MockFixtures fixtures;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const Document& doc = docs[i];
        auto plan = extractor_plan(i, strip_provenance(doc.gold));

        ChatRequest base = render_extraction_prompt(spec, doc, ctx.bank, ctx.config.extractor);
        std::string raw;
        if (plan.attempt2.empty()) {
            fixtures.responses[chat_cache_key(base)] = plan.attempt1;
            raw = plan.attempt1;
        } else {
            fixtures.responses[chat_cache_key(base)] = plan.attempt1;
            ChatRequest reask = base;
            reask.user += "\n\n" + ctx.bank.reask_reminder;
            fixtures.responses[chat_cache_key(reask)] = plan.attempt2;
            raw = plan.attempt2;
        }

        auto [facts, diag] = parse_llm_output(raw);
        if (spec.output_budget > 0 && facts.size() > static_cast<std::size_t>(spec.output_budget)) {
            facts.resize(static_cast<std::size_t>(spec.output_budget));
        }

        ChatRequest correction =
            render_correction_prompt(doc, facts, ctx.bank, ctx.config.corrector);
        auto reply = corrector_reply(i, facts, strip_provenance(doc.gold));
        fixtures.responses[chat_cache_key(correction)] = facts_to_json_text(reply);
    }

    fixtures.save(output);
    std::cout << "wrote " << fixtures.responses.size() << " fixture responses -> "
              << output.string() << "\n";
}

void generate_opt_fixtures(PipelineContext& ctx, const std::filesystem::path& output) {
    // fresh gateway: no cache, recorder fills every miss
    ctx.gateway = std::make_shared<LlmGateway>(std::nullopt, nullptr, nullptr, 1);

    std::map<std::string, std::vector<HyperRelationalFact>> by_text;
    for (const auto& d : ctx.corpus) by_text[d.text] = strip_provenance(d.gold);

    ctx.gateway->set_mock_recorder([&](const ChatRequest& request, const std::string& digest) {
        // the target document is the last sentinel-framed block
        const std::string& user = request.user;
        auto open = user.rfind("<<<INPUT");
        if (open == std::string::npos) return std::string("[]");
        auto start = user.find('\n', open);
        if (start == std::string::npos) return std::string("[]");
        auto close = user.find(">>>", start);
        if (close == std::string::npos) return std::string("[]");
        auto line_start = user.rfind('\n', close);
        std::string doc_text = user.substr(start + 1, line_start - start - 1);

        auto it = by_text.find(doc_text);
        if (it == by_text.end()) return std::string("[]");
        auto facts = it->second;

        // deterministic degradation: some candidates lose trailing facts
        std::uint64_t h = text::fnv1a64(digest);
        std::size_t drop = facts.empty() ? 0 : h % std::min<std::size_t>(3, facts.size() + 1);
        for (std::size_t i = 0; i < drop && !facts.empty(); ++i) facts.pop_back();
        std::string body = facts_to_json_text(facts);
        return (h >> 8) & 1 ? "```json\n" + body + "\n```" : body;
    });

    cmd_optimize(ctx);

    MockFixtures fixtures;
    for (const auto& [digest, response] : ctx.gateway->recorded_responses()) {
        fixtures.responses[digest] = response;
    }
    fixtures.save(output);
    std::cout << "wrote " << fixtures.responses.size() << " fixture responses -> "
              << output.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regenerate bundled mock fixtures"};
    std::string config_path, mode = "run", output;
    app.add_option("--config", config_path, "pipeline config file")->required();
    app.add_option("--mode", mode, "run | opt")->required();
    app.add_option("--output", output, "fixtures file to write")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig config = load_config(config_path);
        RunOptions options;
        options.mock_all = true;
        PipelineContext ctx = make_context(std::move(config), options);
        if (mode == "run") {
            generate_run_fixtures(ctx, output);
        } else if (mode == "opt") {
            generate_opt_fixtures(ctx, output);
        } else {
            throw hrkg::ConfigError("unknown mode: " + mode);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
