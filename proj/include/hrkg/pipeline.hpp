#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hrkg/config.hpp"
#include "hrkg/corpus.hpp"
#include "hrkg/evaluation.hpp"
#include "hrkg/extraction.hpp"
#include "hrkg/gateway.hpp"
#include "hrkg/optimizer.hpp"
#include "hrkg/prompts.hpp"
#include "hrkg/run_record.hpp"

namespace hrkg {

struct RunOptions {
    bool mock_all = false;      // --mock: force every role into mock mode
    bool no_correct = false;    // --no-correct: ablate the correction stage
    std::optional<std::size_t> limit; // --limit N: first N docs of the split
    std::optional<std::uint64_t> seed_override; // --seed: split seed
    bool normalize = false;     // --normalize: fixed timestamp in reports
    std::string split_name = "test"; // --split {train,dev,test,all}
    std::string format = "table";    // --format {json,table}
};

// Everything a pipeline command needs, assembled once per invocation.
struct PipelineContext {
    PipelineConfig config;
    PromptBank bank;
    std::shared_ptr<LlmGateway> gateway;
    std::vector<Document> corpus;
    DatasetSplit split;
    bool correction_enabled = true;
};

PipelineContext make_context(PipelineConfig config, const RunOptions& options,
                             bool load_corpus_file = true);

// The documents a command operates on: the named split, sorted by id,
// truncated to the limit.
std::vector<Document> docs_for(const PipelineContext& ctx, const RunOptions& options);

// The extraction prompt: the optimized spec file when configured, otherwise
// assembled from the instruction bank + exemplar genes against train.
PromptSpec resolve_promptspec(const PipelineContext& ctx);

// Staged, resumable pipeline passes. Each skips documents that already have
// the stage's record in the run stream and appends new records in document
// order (so the stream stays byte-deterministic under concurrency).
void run_extract_stage(PipelineContext& ctx, const std::vector<Document>& docs);
void run_correct_stage(PipelineContext& ctx, const std::vector<Document>& docs);

// Builds the ScoreReport from the final-stage records of the given docs.
// Throws ValidationError when a document has no final-stage record.
ScoreReport evaluate_from_records(PipelineContext& ctx, const std::vector<Document>& docs,
                                  const RunOptions& options);

// Scores candidates by running extract(+correct per pipeline config) over
// the dev subset and computing macro soft F1 with the configured embedder.
class PipelineScorer : public CandidateScorer {
public:
    explicit PipelineScorer(PipelineContext& ctx) : ctx_(ctx) {}

    int worst_case_calls(std::size_t doc_count) const override;
    Outcome score(const PromptSpec& spec, std::span<const Document> dev_subset) override;

private:
    PipelineContext& ctx_;
    std::map<std::string, std::vector<double>> embed_memo_; // canonical -> vector
};

// Subcommand bodies. All throw; the CLI maps exception types to exit codes.
void cmd_ingest(const PipelineConfig& config, const std::filesystem::path& input, bool lenient);
void cmd_split(PipelineContext& ctx);
void cmd_optimize(PipelineContext& ctx);
void cmd_extract(PipelineContext& ctx, const RunOptions& options);
void cmd_correct(PipelineContext& ctx, const RunOptions& options);
ScoreReport cmd_evaluate(PipelineContext& ctx, const RunOptions& options);
void cmd_export(PipelineContext& ctx, const RunOptions& options, const std::string& format,
                const std::optional<std::filesystem::path>& output);
ScoreReport cmd_run(PipelineContext& ctx, const RunOptions& options);

} // namespace hrkg
