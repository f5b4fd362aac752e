#include "hrkg/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

EndpointConfig read_endpoint(const json& j, const std::string& role) {
    EndpointConfig cfg;
    if (!j.is_object()) throw ConfigError("roles." + role + " must be an object");
    cfg.base_url = j.value("base_url", cfg.base_url);
    cfg.model = j.value("model", "");
    if (cfg.model.empty()) throw ConfigError("roles." + role + ".model is required");
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
    if (cfg.timeout_s <= 0) throw ConfigError("roles." + role + ".timeout_s must be > 0");
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    if (cfg.max_retries < 0) throw ConfigError("roles." + role + ".max_retries must be >= 0");
    cfg.temperature = j.value("temperature", cfg.temperature);
    if (cfg.temperature < 0.0 || cfg.temperature > 2.0) {
        throw ConfigError("roles." + role + ".temperature must be in [0, 2]");
    }
    cfg.max_output_tokens = j.value("max_output_tokens", cfg.max_output_tokens);
    if (j.contains("seed")) {
        if (j["seed"].is_null()) {
            cfg.request_seed.reset();
        } else {
            cfg.request_seed = j["seed"].get<std::int64_t>();
        }
    }
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.mock = j.value("mock", false);
    return cfg;
}

} // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();

    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path.string() + ": config is not a JSON object");

    PipelineConfig cfg;
    cfg.config_path = std::filesystem::absolute(path);
    const auto base = cfg.config_path.parent_path();

    for (const char* key : {"corpus_file", "work_dir", "cache_dir"}) {
        if (!doc.contains(key) || !doc[key].is_string()) {
            throw ConfigError(path.string() + ": \"" + key + "\" (string) is required");
        }
    }
    cfg.corpus_file = resolve(base, doc["corpus_file"].get<std::string>());
    cfg.work_dir = resolve(base, doc["work_dir"].get<std::string>());
    cfg.cache_dir = resolve(base, doc["cache_dir"].get<std::string>());
    if (std::filesystem::weakly_canonical(cfg.work_dir) ==
        std::filesystem::weakly_canonical(cfg.cache_dir)) {
        throw ConfigError(path.string() + ": work_dir and cache_dir must be distinct");
    }
    if (doc.contains("prompt_bank_dir") && !doc["prompt_bank_dir"].is_null()) {
        cfg.prompt_bank_dir = resolve(base, doc["prompt_bank_dir"].get<std::string>());
    }
    if (doc.contains("mock_fixtures") && !doc["mock_fixtures"].is_null()) {
        cfg.mock_fixtures = resolve(base, doc["mock_fixtures"].get<std::string>());
    }

    if (!doc.contains("roles") || !doc["roles"].is_object()) {
        throw ConfigError(path.string() + ": \"roles\" object is required");
    }
    for (const char* role : {"extractor", "corrector", "embedder"}) {
        if (!doc["roles"].contains(role)) {
            throw ConfigError(path.string() + ": roles." + std::string(role) + " is required");
        }
    }
    cfg.extractor = read_endpoint(doc["roles"]["extractor"], "extractor");
    cfg.corrector = read_endpoint(doc["roles"]["corrector"], "corrector");
    cfg.embedder = read_endpoint(doc["roles"]["embedder"], "embedder");

    if (doc.contains("split")) {
        const auto& s = doc["split"];
        cfg.split.seed = s.value("seed", cfg.split.seed);
        if (s.contains("fractions")) {
            if (!s["fractions"].is_array() || s["fractions"].size() != 3) {
                throw ConfigError(path.string() + ": split.fractions must be [train, dev, test]");
            }
            for (size_t i = 0; i < 3; ++i) cfg.split.fractions[i] = s["fractions"][i].get<double>();
        }
    }

    if (doc.contains("correction_policy")) {
        const auto& p = doc["correction_policy"];
        cfg.policy.grounding = parse_grounding_mode(p.value("grounding", "warn"));
        cfg.policy.allow_additions = p.value("allow_additions", false);
        cfg.policy.allow_deletions = p.value("allow_deletions", true);
        cfg.policy.edit_heuristic = p.value("edit_heuristic", true);
    }
    cfg.correction_enabled = doc.value("correction_enabled", true);

    if (doc.contains("prompt")) {
        const auto& p = doc["prompt"];
        if (p.contains("spec_file") && !p["spec_file"].is_null()) {
            cfg.prompt.spec_file = resolve(base, p["spec_file"].get<std::string>());
        }
        cfg.prompt.instruction_index = p.value("instruction_index", cfg.prompt.instruction_index);
        if (p.contains("exemplar_strategy")) {
            cfg.prompt.strategy =
                parse_exemplar_strategy(p["exemplar_strategy"].get<std::string>());
        }
        cfg.prompt.exemplar_count = p.value("exemplar_count", cfg.prompt.exemplar_count);
        cfg.prompt.output_budget = p.value("output_budget", cfg.prompt.output_budget);
        cfg.prompt.exemplar_seed = p.value("exemplar_seed", cfg.prompt.exemplar_seed);
    }

    if (doc.contains("optimizer")) {
        const auto& o = doc["optimizer"];
        cfg.optimizer.beam_width = o.value("beam_width", cfg.optimizer.beam_width);
        cfg.optimizer.max_iterations = o.value("max_iterations", cfg.optimizer.max_iterations);
        cfg.optimizer.dev_subset_size =
            o.value("dev_subset_size", cfg.optimizer.dev_subset_size);
        cfg.optimizer.call_budget = o.value("budget", cfg.optimizer.call_budget);
        cfg.optimizer.seed = o.value("seed", cfg.optimizer.seed);
        if (o.contains("exemplar_strategies")) {
            cfg.optimizer.strategies.clear();
            for (const auto& s : o["exemplar_strategies"]) {
                cfg.optimizer.strategies.push_back(
                    parse_exemplar_strategy(s.get<std::string>()));
            }
        }
        if (o.contains("exemplar_counts")) {
            cfg.optimizer.exemplar_counts.clear();
            for (const auto& k : o["exemplar_counts"]) {
                cfg.optimizer.exemplar_counts.push_back(k.get<int>());
            }
        }
    }

    cfg.concurrency = doc.value("concurrency", cfg.concurrency);
    if (cfg.concurrency < 1) throw ConfigError(path.string() + ": concurrency must be >= 1");
    cfg.max_attempts = doc.value("max_attempts", cfg.max_attempts);
    if (cfg.max_attempts < 1) throw ConfigError(path.string() + ": max_attempts must be >= 1");

    // digest over the parsed document (key-sorted dump), so formatting and
    // key order in the file do not change identity
    cfg.digest = text::sha256_hex(doc.dump());
    return cfg;
}

void check_config_inputs(const PipelineConfig& config, bool require_corpus,
                         bool require_fixtures) {
    if (require_corpus && !std::filesystem::exists(config.corpus_file)) {
        throw ConfigError("corpus file does not exist: " + config.corpus_file.string() +
                          " (run `ingest` first)");
    }
    if (config.prompt_bank_dir && !std::filesystem::exists(*config.prompt_bank_dir)) {
        throw ConfigError("prompt bank directory does not exist: " +
                          config.prompt_bank_dir->string());
    }
    if (config.prompt.spec_file && !std::filesystem::exists(*config.prompt.spec_file)) {
        throw ConfigError("prompt spec file does not exist: " + config.prompt.spec_file->string());
    }
    const bool chat_mock = config.extractor.mock || config.corrector.mock;
    if (require_fixtures && chat_mock) {
        if (!config.mock_fixtures) {
            throw ConfigError("a chat role is in mock mode but \"mock_fixtures\" is not set");
        }
        if (!std::filesystem::exists(*config.mock_fixtures)) {
            throw ConfigError("mock fixtures file does not exist: " +
                              config.mock_fixtures->string());
        }
    }
}

} // namespace hrkg
