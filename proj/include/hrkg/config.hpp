#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hrkg/correction.hpp"
#include "hrkg/corpus.hpp"
#include "hrkg/gateway.hpp"
#include "hrkg/optimizer.hpp"

namespace hrkg {

struct SplitConfig {
    std::uint64_t seed = 7;
    std::array<double, 3> fractions{0.8, 0.1, 0.1};
};

// How the extraction prompt is assembled when no optimized spec file is
// given: instruction_index into the bank, plus exemplar selection genes.
struct PromptConfig {
    std::optional<std::filesystem::path> spec_file;
    std::size_t instruction_index = 0;
    ExemplarStrategy strategy = ExemplarStrategy::qualifier_rich;
    int exemplar_count = 4;
    int output_budget = 16;
    std::uint64_t exemplar_seed = 1;
};

struct OptimizerSettings {
    int beam_width = 3;
    int max_iterations = 4;
    std::size_t dev_subset_size = 20;
    int call_budget = 500;
    std::uint64_t seed = 13;
    std::vector<ExemplarStrategy> strategies{ExemplarStrategy::first_k,
                                             ExemplarStrategy::qualifier_rich};
    std::vector<int> exemplar_counts{2, 4, 6};
};

struct PipelineConfig {
    std::filesystem::path config_path; // where it was loaded from
    std::filesystem::path corpus_file;
    std::filesystem::path work_dir;
    std::filesystem::path cache_dir;
    std::optional<std::filesystem::path> prompt_bank_dir;
    std::optional<std::filesystem::path> mock_fixtures;

    EndpointConfig extractor;
    EndpointConfig corrector;
    EndpointConfig embedder;

    SplitConfig split;
    CorrectionPolicy policy;
    bool correction_enabled = true;
    PromptConfig prompt;
    OptimizerSettings optimizer;
    int concurrency = 4;
    int max_attempts = 2;

    std::string digest; // sha256 of the canonical config JSON
};

// Loads and validates a config file (JSON, keys documented in
// docs/formats.md). Relative paths are resolved against the config file's
// directory. Throws ConfigError with the offending key.
PipelineConfig load_config(const std::filesystem::path& path);

// Existence checks that depend on the command: ingest creates the corpus
// file, everything else requires it; fixture files matter only to commands
// that will issue chat calls.
void check_config_inputs(const PipelineConfig& config, bool require_corpus,
                         bool require_fixtures);

} // namespace hrkg
