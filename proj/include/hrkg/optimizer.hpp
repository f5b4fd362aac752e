#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hrkg/corpus.hpp"
#include "hrkg/extraction.hpp"

namespace hrkg {

struct OptimizerConfig {
    int beam_width = 3;
    int max_iterations = 4;
    std::size_t dev_subset_size = 20;
    int call_budget = 500;
    std::uint64_t seed = 13;
    std::vector<std::string> instruction_bank;
    std::string schema_note;
    std::vector<ExemplarStrategy> strategies{ExemplarStrategy::first_k,
                                             ExemplarStrategy::qualifier_rich};
    std::vector<int> exemplar_counts{2, 4, 6};
    int output_budget = 16;
};

struct Candidate {
    std::string id;
    std::size_t instruction_index = 0;
    ExemplarStrategy strategy = ExemplarStrategy::first_k;
    int exemplar_count = 0;
    std::uint64_t exemplar_seed = 0;
    PromptSpec spec;
    std::optional<double> score; // soft F1 on the dev subset, in [0, 1]
    std::string parent_id;       // empty for seed candidates
    std::string mutation = "seed";
    int iteration = 0;
    int calls_used = 0;
    bool memoized = false; // score copied from an identical earlier spec
};

// Scores one PromptSpec by running the pipeline over the dev subset.
// worst_case_calls is the upper bound the budget gate charges before an
// evaluation starts, so the total can never overshoot the budget.
class CandidateScorer {
public:
    virtual ~CandidateScorer() = default;

    struct Outcome {
        double soft_f1 = 0.0;
        int calls = 0;
    };

    virtual int worst_case_calls(std::size_t doc_count) const = 0;
    virtual Outcome score(const PromptSpec& spec, std::span<const Document> dev_subset) = 0;
};

struct TraceIteration {
    int iteration = 0;
    double best_so_far = 0.0;
    std::vector<std::string> beam;
};

struct SearchTrace {
    std::vector<Candidate> candidates; // every scored candidate, in evaluation order
    std::vector<TraceIteration> iterations;
    std::vector<std::string> dev_subset_ids;
    int total_calls = 0;
    int budget = 0;
    std::string stop_reason; // "iterations" | "budget" | "no-mutations"
};

std::string trace_to_json_text(const SearchTrace& trace);

// Cartesian product of (instruction bank x strategies x counts), truncated
// to beam_width * 4 by seeded sampling when larger. Deterministic for a
// fixed config. Throws ValidationError on an empty train set.
std::vector<Candidate> seed_candidates(const OptimizerConfig& config,
                                       std::span<const Document> train);

// Up to 3 children: exemplar swap, exemplar count +/-2 clamped to the
// configured counts' range, instruction swap (omitted for a 1-entry bank).
// Deterministic given (candidate id, config seed, iteration).
std::vector<Candidate> mutate(const Candidate& candidate, const OptimizerConfig& config,
                              int iteration, std::span<const Document> train);

struct OptimizeResult {
    Candidate best;
    SearchTrace trace;
};

// Beam search: score seeds, keep top beam_width by (score, id), mutate,
// repeat. The budget gate runs before each candidate evaluation and partial
// evaluations are never started; duplicate specs are memoized instead of
// re-scored. Throws OptimizationError when the budget cannot cover even one
// candidate.
OptimizeResult optimize(std::span<const Document> train, std::span<const Document> dev,
                        const OptimizerConfig& config, CandidateScorer& scorer);

} // namespace hrkg
