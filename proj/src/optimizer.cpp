#include "hrkg/optimizer.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::ordered_json;

namespace {

void validate_config(const OptimizerConfig& config) {
    if (config.beam_width < 1) throw ConfigError("optimizer beam width must be >= 1");
    if (config.call_budget <= 0) throw ConfigError("optimizer call budget must be > 0");
    if (config.instruction_bank.empty()) throw ConfigError("optimizer instruction bank is empty");
    if (config.strategies.empty()) throw ConfigError("optimizer strategy list is empty");
    if (config.exemplar_counts.empty()) throw ConfigError("optimizer exemplar counts are empty");
}

PromptSpec build_spec(const OptimizerConfig& config, std::span<const Document> train,
                      std::size_t instruction_index, ExemplarStrategy strategy, int count,
                      std::uint64_t exemplar_seed) {
    PromptSpec spec;
    spec.instruction = config.instruction_bank[instruction_index];
    spec.schema_note = config.schema_note;
    spec.output_budget = config.output_budget;
    spec.exemplars = select_exemplars(train, static_cast<std::size_t>(std::max(count, 0)),
                                      strategy, exemplar_seed);
    return spec;
}

} // namespace

std::vector<Candidate> seed_candidates(const OptimizerConfig& config,
                                       std::span<const Document> train) {
    validate_config(config);
    if (train.empty()) throw ValidationError("seed_candidates: train set is empty");

    std::vector<Candidate> all;
    std::size_t ordinal = 0;
    for (std::size_t i = 0; i < config.instruction_bank.size(); ++i) {
        for (auto strategy : config.strategies) {
            for (int count : config.exemplar_counts) {
                Candidate c;
                char id[96];
                std::snprintf(id, sizeof(id), "c%03zu-i%zu-%s-k%d", ordinal, i,
                              std::string(to_string(strategy)).c_str(), count);
                c.id = id;
                c.instruction_index = i;
                c.strategy = strategy;
                c.exemplar_count = count;
                c.exemplar_seed = config.seed * 1000003ULL + ordinal;
                c.spec = build_spec(config, train, i, strategy, count, c.exemplar_seed);
                c.mutation = "seed";
                c.iteration = 0;
                all.push_back(std::move(c));
                ++ordinal;
            }
        }
    }

    const std::size_t cap = static_cast<std::size_t>(config.beam_width) * 4;
    if (all.size() > cap) {
        std::vector<std::size_t> indices(all.size());
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        std::mt19937_64 rng(config.seed);
        for (std::size_t i = indices.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(indices[i - 1], indices[j]);
        }
        indices.resize(cap);
        std::sort(indices.begin(), indices.end()); // keep product order
        std::vector<Candidate> sampled;
        sampled.reserve(cap);
        for (std::size_t idx : indices) sampled.push_back(std::move(all[idx]));
        all = std::move(sampled);
    }
    return all;
}

std::vector<Candidate> mutate(const Candidate& candidate, const OptimizerConfig& config,
                              int iteration, std::span<const Document> train) {
    validate_config(config);
    if (!candidate.score) {
        throw ValidationError("mutate: candidate " + candidate.id + " has not been scored");
    }

    std::mt19937_64 rng(text::fnv1a64(candidate.id) ^
                        (config.seed * 0x9E3779B97F4A7C15ULL) ^
                        static_cast<std::uint64_t>(iteration));
    std::vector<Candidate> children;

    auto child_of = [&](std::string suffix, std::string label) {
        Candidate child = candidate;
        child.id = candidate.id + suffix;
        child.parent_id = candidate.id;
        child.mutation = std::move(label);
        child.iteration = iteration;
        child.score.reset();
        child.calls_used = 0;
        child.memoized = false;
        return child;
    };

    // exemplar swap: replace one position with a fresh eligible pick
    if (!candidate.spec.exemplars.empty()) {
        std::set<std::string> used;
        for (const auto& [extext, facts] : candidate.spec.exemplars) used.insert(extext);
        std::vector<const Document*> pool;
        for (const auto& d : train) {
            if (!d.gold.empty() && !used.count(d.text)) pool.push_back(&d);
        }
        if (!pool.empty()) {
            std::size_t pos = static_cast<std::size_t>(rng() % candidate.spec.exemplars.size());
            const Document* pick = pool[static_cast<std::size_t>(rng() % pool.size())];
            Candidate child = child_of("-m" + std::to_string(iteration) + "swap", "exemplar-swap");
            child.spec.exemplars[pos] = {pick->text, pick->gold};
            children.push_back(std::move(child));
        }
    }

    // exemplar count +/-2, clamped to the configured counts' range
    {
        auto [lo_it, hi_it] =
            std::minmax_element(config.exemplar_counts.begin(), config.exemplar_counts.end());
        const int lo = *lo_it, hi = *hi_it;
        int dir = (rng() & 1) ? 2 : -2;
        int next = std::clamp(candidate.exemplar_count + dir, lo, hi);
        if (next == candidate.exemplar_count) {
            next = std::clamp(candidate.exemplar_count - dir, lo, hi);
        }
        if (next != candidate.exemplar_count) {
            const char* label = next > candidate.exemplar_count ? "count+2" : "count-2";
            Candidate child =
                child_of("-m" + std::to_string(iteration) + "k" + std::to_string(next), label);
            child.exemplar_count = next;
            child.spec = build_spec(config, train, child.instruction_index, child.strategy, next,
                                    child.exemplar_seed);
            children.push_back(std::move(child));
        }
    }

    // instruction swap: next instruction in the bank (no-op for a bank of 1)
    if (config.instruction_bank.size() > 1) {
        std::size_t next = (candidate.instruction_index + 1) % config.instruction_bank.size();
        Candidate child =
            child_of("-m" + std::to_string(iteration) + "i" + std::to_string(next),
                     "instruction-swap");
        child.instruction_index = next;
        child.spec.instruction = config.instruction_bank[next];
        children.push_back(std::move(child));
    }

    return children;
}

namespace {

bool better(const Candidate& a, const Candidate& b) {
    double sa = a.score.value_or(-1.0), sb = b.score.value_or(-1.0);
    if (sa != sb) return sa > sb;
    return a.id < b.id;
}

} // namespace

std::string trace_to_json_text(const SearchTrace& trace) {
    ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "hrkg-opt-trace";
    doc["budget"] = trace.budget;
    doc["total_calls"] = trace.total_calls;
    doc["stop_reason"] = trace.stop_reason;
    doc["dev_subset"] = trace.dev_subset_ids;
    auto cands = ordered_json::array();
    for (const auto& c : trace.candidates) {
        ordered_json jc;
        jc["id"] = c.id;
        jc["parent"] = c.parent_id;
        jc["mutation"] = c.mutation;
        jc["iteration"] = c.iteration;
        jc["score"] = c.score ? ordered_json(*c.score) : ordered_json(nullptr);
        jc["calls"] = c.calls_used;
        jc["memoized"] = c.memoized;
        jc["instruction_index"] = c.instruction_index;
        jc["strategy"] = std::string(to_string(c.strategy));
        jc["exemplar_count"] = c.exemplar_count;
        cands.push_back(std::move(jc));
    }
    doc["candidates"] = std::move(cands);
    auto iters = ordered_json::array();
    for (const auto& it : trace.iterations) {
        iters.push_back(ordered_json{
            {"iteration", it.iteration}, {"best_so_far", it.best_so_far}, {"beam", it.beam}});
    }
    doc["iterations"] = std::move(iters);
    return doc.dump(2) + "\n";
}

OptimizeResult optimize(std::span<const Document> train, std::span<const Document> dev,
                        const OptimizerConfig& config, CandidateScorer& scorer) {
    validate_config(config);
    if (dev.empty()) throw ValidationError("optimize: dev set is empty");

    // dev subset: seeded sample, fixed across all candidates
    std::vector<const Document*> dev_ptrs;
    for (const auto& d : dev) dev_ptrs.push_back(&d);
    std::mt19937_64 rng(config.seed ^ 0x5DEECE66DULL);
    for (std::size_t i = dev_ptrs.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(dev_ptrs[i - 1], dev_ptrs[j]);
    }
    dev_ptrs.resize(std::min(dev_ptrs.size(),
                             std::max<std::size_t>(config.dev_subset_size, 1)));
    std::sort(dev_ptrs.begin(), dev_ptrs.end(),
              [](const Document* a, const Document* b) { return a->id < b->id; });
    std::vector<Document> subset;
    subset.reserve(dev_ptrs.size());
    for (const auto* d : dev_ptrs) subset.push_back(*d);

    SearchTrace trace;
    trace.budget = config.call_budget;
    for (const auto& d : subset) trace.dev_subset_ids.push_back(d.id);

    std::map<std::string, double> memo; // spec digest -> score
    bool budget_stop = false;

    auto try_score = [&](Candidate& c) -> bool {
        const std::string digest = promptspec_digest(c.spec);
        if (auto it = memo.find(digest); it != memo.end()) {
            c.score = it->second;
            c.memoized = true;
            c.calls_used = 0;
            return true;
        }
        if (trace.total_calls + scorer.worst_case_calls(subset.size()) > config.call_budget) {
            budget_stop = true;
            return false;
        }
        auto outcome = scorer.score(c.spec, subset);
        c.score = outcome.soft_f1;
        c.calls_used = outcome.calls;
        trace.total_calls += outcome.calls;
        memo[digest] = outcome.soft_f1;
        return true;
    };

    std::vector<Candidate> beam;
    std::set<std::string> seen_ids;
    double best_so_far = -1.0;

    auto absorb = [&](std::vector<Candidate>&& batch) {
        for (auto& c : batch) {
            if (budget_stop) break;
            if (!seen_ids.insert(c.id).second) continue;
            if (!try_score(c)) break;
            best_so_far = std::max(best_so_far, *c.score);
            trace.candidates.push_back(c);
            beam.push_back(std::move(c));
        }
        std::sort(beam.begin(), beam.end(), better);
        if (beam.size() > static_cast<std::size_t>(config.beam_width)) {
            beam.resize(static_cast<std::size_t>(config.beam_width));
        }
    };

    absorb(seed_candidates(config, train));
    if (trace.candidates.empty()) {
        throw OptimizationError("optimizer call budget of " + std::to_string(config.call_budget) +
                                " cannot cover a single candidate evaluation");
    }
    auto record_iteration = [&](int iteration) {
        TraceIteration ti;
        ti.iteration = iteration;
        ti.best_so_far = best_so_far;
        for (const auto& c : beam) ti.beam.push_back(c.id);
        trace.iterations.push_back(std::move(ti));
    };
    record_iteration(0);

    for (int iteration = 1; iteration <= config.max_iterations && !budget_stop; ++iteration) {
        std::vector<Candidate> children;
        for (const auto& parent : beam) {
            auto kids = mutate(parent, config, iteration, train);
            for (auto& k : kids) children.push_back(std::move(k));
        }
        std::erase_if(children, [&](const Candidate& c) { return seen_ids.count(c.id) > 0; });
        if (children.empty()) {
            trace.stop_reason = "no-mutations";
            break;
        }
        absorb(std::move(children));
        record_iteration(iteration);
    }

    if (trace.stop_reason.empty()) {
        trace.stop_reason = budget_stop ? "budget" : "iterations";
    }

    OptimizeResult result;
    result.trace = std::move(trace);
    result.best = *std::min_element(result.trace.candidates.begin(),
                                    result.trace.candidates.end(), better);
    return result;
}

} // namespace hrkg
