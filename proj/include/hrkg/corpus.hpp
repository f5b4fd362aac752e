#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hrkg/fact.hpp"

namespace hrkg {

struct Document {
    std::string id;
    std::string text;
    std::optional<std::vector<std::string>> tokens;
    std::vector<HyperRelationalFact> gold;
};

struct DatasetSplit {
    std::vector<Document> train;
    std::vector<Document> dev;
    std::vector<Document> test;
};

struct LoadOptions {
    // Skip records that fail schema validation instead of failing the load.
    bool lenient = false;
};

// Parse HyperRED-format data: one JSON record per line, or one JSON array
// (autodetected). Each record carries a tokenized sentence plus relations
// with half-open head/tail token spans, a relation label, and qualifier
// spans with labels. Document ids are taken from the record's "id" field
// when present, otherwise assigned as doc-%06d in source order.
// Errors name the record number and offending field.
std::vector<Document> parse_hyperred(std::string_view data, const LoadOptions& opts = {});

std::vector<Document> load_hyperred(const std::filesystem::path& path,
                                    const LoadOptions& opts = {});

// Seeded Fisher-Yates shuffle (mt19937_64, j = rng() % (i+1), descending i),
// then cuts at floor(fraction * n) boundaries with the remainder assigned to
// train. Fractions must be non-negative and sum to 1 within 1e-9.
DatasetSplit split_dataset(std::vector<Document> docs, std::uint64_t seed,
                           std::array<double, 3> fractions);

enum class ExemplarStrategy { first_k, seeded_random, qualifier_rich };

ExemplarStrategy parse_exemplar_strategy(std::string_view name);
std::string_view to_string(ExemplarStrategy strategy);

using Exemplar = std::pair<std::string, std::vector<HyperRelationalFact>>;

// Picks k (text, gold facts) pairs from documents that have at least one
// gold fact; returns fewer when fewer are eligible. qualifier-rich sorts by
// descending total qualifier count with ties broken by id; seeded-random
// shuffles the eligible pool with the given seed.
std::vector<Exemplar> select_exemplars(std::span<const Document> train, std::size_t k,
                                       ExemplarStrategy strategy, std::uint64_t seed = 0);

// Interchange corpus document: versioned JSON so later stages never re-read
// the raw dataset.
std::string corpus_to_json(std::span<const Document> docs);
std::vector<Document> corpus_from_json(std::string_view bytes);

void save_corpus(const std::filesystem::path& path, std::span<const Document> docs);
std::vector<Document> load_corpus(const std::filesystem::path& path);

} // namespace hrkg
