#pragma once

// Shared test utilities: seeded generators for nasty strings and random
// facts, plus source-tree paths baked in by CMake.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hrkg/fact.hpp"

namespace hrkg::testutil {

inline std::filesystem::path source_dir() {
    return std::filesystem::path(HRKG_SOURCE_DIR);
}

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path() / ("hrkg-test-" + tag);
    std::filesystem::remove_all(base);
    std::filesystem::create_directories(base);
    return base;
}

// Short token built from a pool that includes canonical-layout
// metacharacters, unicode, and whitespace-adjacent noise.
inline std::string random_token(std::mt19937_64& rng) {
    static const std::vector<std::string> pool = {
        "alpha", "beta",  "Gamma", "delta", "x",    "Obama", "2009", "a|b",
        "k=v",   "back\\slash", "tab\tchar", "Ångström", "café", "ÅB", "é",
        "multi word", " padded ", "UPPER", "mixedCase", "42"};
    return pool[rng() % pool.size()];
}

inline std::string random_text(std::mt19937_64& rng, int min_tokens = 1, int max_tokens = 4) {
    int n = min_tokens + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                              max_tokens - min_tokens + 1));
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += random_token(rng);
    }
    return out;
}

inline HyperRelationalFact random_fact(std::mt19937_64& rng, int max_qualifiers = 3) {
    std::vector<Qualifier> quals;
    int nq = static_cast<int>(rng() % static_cast<std::uint64_t>(max_qualifiers + 1));
    for (int i = 0; i < nq; ++i) {
        quals.push_back({random_text(rng, 1, 2), random_text(rng, 1, 2)});
    }
    return make_fact(random_text(rng), random_text(rng), random_text(rng), std::move(quals));
}

inline std::vector<HyperRelationalFact> random_facts(std::mt19937_64& rng, std::size_t max_n,
                                                     int max_qualifiers = 3) {
    std::vector<HyperRelationalFact> out;
    std::size_t n = rng() % (max_n + 1);
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_fact(rng, max_qualifiers));
    return out;
}

} // namespace hrkg::testutil
