#include "hrkg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "hrkg/correction.hpp"
#include "hrkg/graph.hpp"
#include "hrkg/text.hpp"

namespace hrkg {

using nlohmann::ordered_json;

namespace {

std::filesystem::path records_path(const PipelineConfig& config) {
    return config.work_dir / "records.jsonl";
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start)
        .count();
}

// Runs worker over docs with a bounded pool; results are handed to sink in
// document order (contiguous prefix), so the record stream and any other
// side effects are deterministic regardless of scheduling. On a worker
// exception the flush stops at the failed index and the exception rethrows.
void ordered_parallel_for(const std::vector<Document>& docs, int concurrency,
                          const std::function<RunRecord(const Document&)>& worker,
                          const std::function<void(RunRecord&&)>& sink) {
    if (docs.empty()) return;
    const int workers = std::max(1, std::min<int>(concurrency, static_cast<int>(docs.size())));

    std::mutex mutex;
    std::condition_variable cv;
    std::map<std::size_t, RunRecord> done;
    std::map<std::size_t, std::exception_ptr> failed;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    auto body = [&] {
        while (!stop.load()) {
            std::size_t index = next.fetch_add(1);
            if (index >= docs.size()) return;
            try {
                RunRecord record = worker(docs[index]);
                std::lock_guard lock(mutex);
                done.emplace(index, std::move(record));
            } catch (...) {
                std::lock_guard lock(mutex);
                failed.emplace(index, std::current_exception());
                stop.store(true);
            }
            cv.notify_all();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(body);

    std::exception_ptr first_error;
    {
        std::unique_lock lock(mutex);
        for (std::size_t flush = 0; flush < docs.size(); ++flush) {
            cv.wait(lock, [&] { return done.count(flush) || failed.count(flush) || stop.load(); });
            if (done.count(flush)) {
                RunRecord record = std::move(done.at(flush));
                done.erase(flush);
                lock.unlock();
                sink(std::move(record));
                lock.lock();
                continue;
            }
            if (failed.count(flush)) {
                first_error = failed.at(flush);
                break;
            }
            // stopped because a later index failed: wait for it to surface
            if (stop.load() && !failed.empty() && !done.count(flush)) {
                first_error = failed.begin()->second;
                break;
            }
        }
    }
    stop.store(true);
    for (auto& t : pool) t.join();
    if (!first_error) {
        std::lock_guard lock(mutex);
        if (!failed.empty()) first_error = failed.begin()->second;
    }
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace

PipelineContext make_context(PipelineConfig config, const RunOptions& options,
                             bool load_corpus_file) {
    PipelineContext ctx{std::move(config), PromptBank::defaults(), nullptr, {}, {}, true};
    if (options.mock_all) {
        ctx.config.extractor.mock = true;
        ctx.config.corrector.mock = true;
        ctx.config.embedder.mock = true;
    }
    if (options.seed_override) ctx.config.split.seed = *options.seed_override;
    ctx.correction_enabled = ctx.config.correction_enabled && !options.no_correct;

    if (ctx.config.prompt_bank_dir) {
        ctx.bank = PromptBank::load(*ctx.config.prompt_bank_dir);
    }

    ctx.gateway = std::make_shared<LlmGateway>(ctx.config.cache_dir, nullptr, nullptr,
                                               ctx.config.concurrency);
    if (ctx.config.mock_fixtures && std::filesystem::exists(*ctx.config.mock_fixtures)) {
        ctx.gateway->set_mock_fixtures(
            std::make_shared<MockFixtures>(MockFixtures::load(*ctx.config.mock_fixtures)));
    }

    if (load_corpus_file) {
        ctx.corpus = load_corpus(ctx.config.corpus_file);
        ctx.split = split_dataset(ctx.corpus, ctx.config.split.seed, ctx.config.split.fractions);
    }
    return ctx;
}

std::vector<Document> docs_for(const PipelineContext& ctx, const RunOptions& options) {
    std::vector<Document> docs;
    if (options.split_name == "train") {
        docs = ctx.split.train;
    } else if (options.split_name == "dev") {
        docs = ctx.split.dev;
    } else if (options.split_name == "test") {
        docs = ctx.split.test;
    } else if (options.split_name == "all") {
        docs = ctx.corpus;
    } else {
        throw ConfigError("unknown split \"" + options.split_name +
                          "\" (expected train, dev, test, or all)");
    }
    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.id < b.id; });
    if (options.limit && docs.size() > *options.limit) docs.resize(*options.limit);
    return docs;
}

PromptSpec resolve_promptspec(const PipelineContext& ctx) {
    if (ctx.config.prompt.spec_file) {
        return load_promptspec(*ctx.config.prompt.spec_file);
    }
    const auto& pc = ctx.config.prompt;
    if (pc.instruction_index >= ctx.bank.instructions.size()) {
        throw ConfigError("prompt.instruction_index " + std::to_string(pc.instruction_index) +
                          " is out of range for a bank of " +
                          std::to_string(ctx.bank.instructions.size()));
    }
    PromptSpec spec;
    spec.instruction = ctx.bank.instructions[pc.instruction_index];
    spec.schema_note = ctx.bank.schema_note;
    spec.output_budget = pc.output_budget;
    spec.exemplars = select_exemplars(ctx.split.train,
                                      static_cast<std::size_t>(std::max(pc.exemplar_count, 0)),
                                      pc.strategy, pc.exemplar_seed);
    return spec;
}

void run_extract_stage(PipelineContext& ctx, const std::vector<Document>& docs) {
    RunLog log = scan_run_records(records_path(ctx.config));
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";

    std::vector<Document> pending;
    for (const auto& d : docs) {
        if (!log.records.count({d.id, Stage::extracted})) pending.push_back(d);
    }
    if (pending.empty()) return;

    PromptSpec spec = resolve_promptspec(ctx);
    RunRecordWriter writer(records_path(ctx.config));

    ordered_parallel_for(
        pending, ctx.config.concurrency,
        [&](const Document& doc) {
            auto start = std::chrono::steady_clock::now();
            ExtractionResult res = extract_document(*ctx.gateway, doc, spec, ctx.bank,
                                                    ctx.config.extractor, ctx.config.max_attempts);
            RunRecord record;
            record.doc_id = doc.id;
            record.stage = Stage::extracted;
            record.prompt_digest = res.prompt_digest;
            record.raw_text = res.raw_text;
            record.facts = std::move(res.facts);
            record.diagnostics = diagnostics_to_json(res.diagnostics);
            record.wall_ms = elapsed_ms(start);
            return record;
        },
        [&](RunRecord&& record) { writer.append(record); });
}

void run_correct_stage(PipelineContext& ctx, const std::vector<Document>& docs) {
    RunLog log = scan_run_records(records_path(ctx.config));
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";

    std::vector<Document> pending;
    for (const auto& d : docs) {
        if (!log.records.count({d.id, Stage::corrected})) pending.push_back(d);
    }
    if (pending.empty()) return;

    // every pending doc needs its extraction facts
    std::map<std::string, std::vector<HyperRelationalFact>> extracted;
    for (const auto& d : pending) {
        auto it = log.records.find({d.id, Stage::extracted});
        if (it == log.records.end()) {
            throw ValidationError("document " + d.id +
                                  " has no extraction record; run `extract` first");
        }
        extracted[d.id] = it->second.facts;
    }

    RunRecordWriter writer(records_path(ctx.config));
    ordered_parallel_for(
        pending, ctx.config.concurrency,
        [&](const Document& doc) {
            auto start = std::chrono::steady_clock::now();
            CorrectionResult res =
                correct_facts(*ctx.gateway, doc, extracted.at(doc.id), ctx.config.policy,
                              ctx.bank, ctx.config.corrector);
            RunRecord record;
            record.doc_id = doc.id;
            record.stage = Stage::corrected;
            record.prompt_digest = res.prompt_digest;
            record.raw_text = res.raw_text;
            record.facts = std::move(res.facts);
            record.diagnostics = correction_diagnostics_to_json(res.diagnostics);
            record.wall_ms = elapsed_ms(start);
            return record;
        },
        [&](RunRecord&& record) { writer.append(record); });
}

ScoreReport evaluate_from_records(PipelineContext& ctx, const std::vector<Document>& docs,
                                  const RunOptions& options) {
    RunLog log = scan_run_records(records_path(ctx.config));
    const Stage final_stage = ctx.correction_enabled ? Stage::corrected : Stage::extracted;

    if (log.records.empty()) {
        throw ValidationError("work dir " + ctx.config.work_dir.string() +
                              " contains no run records; run `extract` first");
    }

    std::vector<std::pair<Document, std::vector<HyperRelationalFact>>> results;
    for (const auto& d : docs) {
        auto it = log.records.find({d.id, final_stage});
        if (it == log.records.end()) {
            throw ValidationError("document " + d.id + " has no " +
                                  std::string(to_string(final_stage)) + " record");
        }
        results.emplace_back(d, it->second.facts);
    }

    ReportMetadata meta;
    meta.embedder_model = ctx.config.embedder.model + (ctx.config.embedder.mock ? " (mock)" : "");
    meta.extractor_model = ctx.config.extractor.model;
    meta.corrector_model = ctx.config.corrector.model;
    meta.correction_enabled = ctx.correction_enabled;
    meta.config_digest = ctx.config.digest;
    if (options.normalize) meta.timestamp = "1970-01-01T00:00:00Z";

    BatchEmbedderFn embed = [&](const std::vector<std::string>& texts) {
        return ctx.gateway->embed(texts, ctx.config.embedder);
    };
    return score_corpus(results, embed, std::move(meta));
}

int PipelineScorer::worst_case_calls(std::size_t doc_count) const {
    int per_doc = ctx_.config.max_attempts + (ctx_.correction_enabled ? 1 : 0);
    return static_cast<int>(doc_count) * per_doc;
}

CandidateScorer::Outcome PipelineScorer::score(const PromptSpec& spec,
                                               std::span<const Document> dev_subset) {
    const std::int64_t calls_before = ctx_.gateway->chat_calls();

    double f1_sum = 0.0;
    EmbedderFn embed_one = [&](const std::string& text) {
        auto it = embed_memo_.find(text);
        if (it != embed_memo_.end()) return it->second;
        std::vector<std::string> one{text};
        auto vec = ctx_.gateway->embed(one, ctx_.config.embedder).front();
        return embed_memo_.emplace(text, std::move(vec)).first->second;
    };

    for (const auto& doc : dev_subset) {
        ExtractionResult ext = extract_document(*ctx_.gateway, doc, spec, ctx_.bank,
                                                ctx_.config.extractor, ctx_.config.max_attempts);
        std::vector<HyperRelationalFact> facts = std::move(ext.facts);
        if (ctx_.correction_enabled) {
            CorrectionResult corr = correct_facts(*ctx_.gateway, doc, facts, ctx_.config.policy,
                                                  ctx_.bank, ctx_.config.corrector);
            facts = std::move(corr.facts);
        }
        f1_sum += soft_scores(facts, doc.gold, embed_one).f1;
    }

    Outcome outcome;
    outcome.soft_f1 = dev_subset.empty() ? 0.0 : f1_sum / static_cast<double>(dev_subset.size());
    outcome.calls = static_cast<int>(ctx_.gateway->chat_calls() - calls_before);
    return outcome;
}

void cmd_ingest(const PipelineConfig& config, const std::filesystem::path& input, bool lenient) {
    LoadOptions opts;
    opts.lenient = lenient;
    auto docs = load_hyperred(input, opts);
    save_corpus(config.corpus_file, docs);
    std::size_t gold = 0;
    for (const auto& d : docs) gold += d.gold.size();
    std::cout << "ingested " << docs.size() << " documents (" << gold << " gold facts) -> "
              << config.corpus_file.string() << "\n";
}

void cmd_split(PipelineContext& ctx) {
    std::filesystem::create_directories(ctx.config.work_dir);
    ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "hrkg-split";
    doc["seed"] = ctx.config.split.seed;
    doc["fractions"] = ctx.config.split.fractions;
    auto ids = [](const std::vector<Document>& docs) {
        auto arr = ordered_json::array();
        for (const auto& d : docs) arr.push_back(d.id);
        return arr;
    };
    doc["train"] = ids(ctx.split.train);
    doc["dev"] = ids(ctx.split.dev);
    doc["test"] = ids(ctx.split.test);
    auto path = ctx.config.work_dir / "split.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
    std::cout << "split sizes: train=" << ctx.split.train.size()
              << " dev=" << ctx.split.dev.size() << " test=" << ctx.split.test.size() << " -> "
              << path.string() << "\n";
}

void cmd_optimize(PipelineContext& ctx) {
    OptimizerConfig config;
    config.beam_width = ctx.config.optimizer.beam_width;
    config.max_iterations = ctx.config.optimizer.max_iterations;
    config.dev_subset_size = ctx.config.optimizer.dev_subset_size;
    config.call_budget = ctx.config.optimizer.call_budget;
    config.seed = ctx.config.optimizer.seed;
    config.instruction_bank = ctx.bank.instructions;
    config.schema_note = ctx.bank.schema_note;
    config.strategies = ctx.config.optimizer.strategies;
    config.exemplar_counts = ctx.config.optimizer.exemplar_counts;
    config.output_budget = ctx.config.prompt.output_budget;

    PipelineScorer scorer(ctx);
    auto result = optimize(ctx.split.train, ctx.split.dev, config, scorer);

    std::filesystem::create_directories(ctx.config.work_dir);
    auto trace_path = ctx.config.work_dir / "opt_trace.json";
    {
        std::ofstream out(trace_path, std::ios::binary | std::ios::trunc);
        out << trace_to_json_text(result.trace);
    }
    auto spec_path = ctx.config.work_dir / "best_prompt.json";
    save_promptspec(spec_path, result.best.spec);

    std::cout << "best candidate " << result.best.id << " dev soft F1 "
              << (result.best.score ? *result.best.score : 0.0) << " after "
              << result.trace.total_calls << "/" << result.trace.budget << " chat calls ("
              << result.trace.stop_reason << ")\n"
              << "wrote " << spec_path.string() << " and " << trace_path.string() << "\n";
}

void cmd_extract(PipelineContext& ctx, const RunOptions& options) {
    auto docs = docs_for(ctx, options);
    run_extract_stage(ctx, docs);
    std::cout << "extracted " << docs.size() << " documents (records in "
              << records_path(ctx.config).string() << ")\n";
}

void cmd_correct(PipelineContext& ctx, const RunOptions& options) {
    auto docs = docs_for(ctx, options);
    run_correct_stage(ctx, docs);
    std::cout << "corrected " << docs.size() << " documents\n";
}

ScoreReport cmd_evaluate(PipelineContext& ctx, const RunOptions& options) {
    auto docs = docs_for(ctx, options);
    auto report = evaluate_from_records(ctx, docs, options);

    std::filesystem::create_directories(ctx.config.work_dir);
    auto path = ctx.config.work_dir / "report.json";
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << report_to_json_text(report, options.normalize);
    }
    if (options.format == "json") {
        std::cout << report_to_json_text(report, options.normalize);
    } else {
        std::cout << render_report_table(report);
    }
    return report;
}

void cmd_export(PipelineContext& ctx, const RunOptions& options, const std::string& format,
                const std::optional<std::filesystem::path>& output) {
    auto docs = docs_for(ctx, options);
    RunLog log = scan_run_records(records_path(ctx.config));
    const Stage final_stage = ctx.correction_enabled ? Stage::corrected : Stage::extracted;

    HRKGraph graph;
    for (const auto& d : docs) {
        auto it = log.records.find({d.id, final_stage});
        if (it == log.records.end()) {
            throw ValidationError("document " + d.id + " has no " +
                                  std::string(to_string(final_stage)) + " record to export");
        }
        graph.insert(it->second.facts);
    }
    std::string bytes = export_graph(graph, parse_export_format(format));
    if (output) {
        if (output->has_parent_path()) std::filesystem::create_directories(output->parent_path());
        std::ofstream out(*output, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write export file: " + output->string());
        out << bytes;
        std::cout << "exported " << graph.size() << " facts -> " << output->string() << "\n";
    } else {
        std::cout << bytes;
    }
}

ScoreReport cmd_run(PipelineContext& ctx, const RunOptions& options) {
    auto docs = docs_for(ctx, options);
    run_extract_stage(ctx, docs);
    if (ctx.correction_enabled) run_correct_stage(ctx, docs);
    return cmd_evaluate(ctx, options);
}

} // namespace hrkg
