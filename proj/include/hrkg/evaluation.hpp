#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hrkg/corpus.hpp"
#include "hrkg/fact.hpp"

namespace hrkg {

struct Pr {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

using EmbedderFn = std::function<std::vector<double>(const std::string&)>;
using BatchEmbedderFn =
    std::function<std::vector<std::vector<double>>(const std::vector<std::string>&)>;

// Soft scores: every fact is serialized with canonicalize_fact and embedded;
// S[i][j] = cosine(pred_i, gold_j) clamped to [0, 1]; precision is the mean
// over predictions of the best gold match, recall the mean over gold of the
// best prediction match, F1 their harmonic mean. Conventions: both sides
// empty -> (1,1,1); exactly one side empty -> (0,0,0).
Pr soft_scores(std::span<const HyperRelationalFact> pred,
               std::span<const HyperRelationalFact> gold, const EmbedderFn& embed);

enum class StrictMode { full, triple_only };

// Exact-match baseline: canonical-string equality (triple_only ignores
// qualifiers), both sides deduplicated first. Same empty conventions.
Pr strict_scores(std::span<const HyperRelationalFact> pred,
                 std::span<const HyperRelationalFact> gold, StrictMode mode);

struct DocScores {
    std::string doc_id;
    Pr strict;
    Pr strict_triple;
    Pr soft;
    int predicted = 0;      // deduplicated prediction count
    int gold = 0;           // deduplicated gold count
    int strict_matches = 0; // full-mode matches
};

struct MicroStrict {
    int matches = 0;
    int predicted = 0;
    int gold = 0;
    Pr scores;
};

struct ReportMetadata {
    std::string embedder_model;
    std::string extractor_model;
    std::string corrector_model;
    bool correction_enabled = true;
    std::string canonicalization_version = "1";
    std::string timestamp;
    std::string config_digest;
};

struct ScoreReport {
    std::vector<DocScores> documents; // sorted by doc id
    Pr macro_strict;
    Pr macro_strict_triple;
    Pr macro_soft;
    MicroStrict micro_full;
    MicroStrict micro_triple;
    ReportMetadata metadata;
};

// Scores every (document, predictions) pair and aggregates. Macro values are
// unweighted means of per-document scores; micro-strict pools match counts.
// Embeddings are batched through the given function and memoized by
// canonical string within the run. Duplicate documents are a validation
// error.
ScoreReport score_corpus(
    const std::vector<std::pair<Document, std::vector<HyperRelationalFact>>>& results,
    const BatchEmbedderFn& embed, ReportMetadata metadata);

// JSON (versioned, schema in docs/formats.md). normalize_timestamp replaces
// the wall-clock timestamp with the epoch so test runs compare byte-equal.
std::string report_to_json_text(const ScoreReport& report, bool normalize_timestamp = false);
ScoreReport report_from_json_text(std::string_view bytes);

// Fixed-width table mirroring the usual Framework/Model/P/R/F1 layout.
std::string render_report_table(const ScoreReport& report);

} // namespace hrkg
