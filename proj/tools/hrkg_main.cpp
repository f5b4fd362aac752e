// hrkg: hyper-relational knowledge graph construction pipeline CLI.
//
// Subcommands: ingest, split, optimize, extract, correct, evaluate, export,
// run, report. Exit codes: 0 success, 1 usage/config error, 2 data
// validation error, 3 transport failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hrkg/config.hpp"
#include "hrkg/errors.hpp"
#include "hrkg/evaluation.hpp"
#include "hrkg/pipeline.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    hrkg::RunOptions options;
    std::string ingest_input;
    bool lenient = false;
    std::string export_format = "canonical-json";
    std::optional<std::string> output_path;
    std::string report_path;
};

int dispatch(const std::string& command, CliArgs& args) {
    using namespace hrkg;

    if (command == "report") {
        std::ifstream in(args.report_path, std::ios::binary);
        if (!in) throw ConfigError("cannot open report file: " + args.report_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        ScoreReport report = report_from_json_text(buf.str());
        if (args.options.format == "json") {
            std::cout << report_to_json_text(report, args.options.normalize);
        } else {
            std::cout << render_report_table(report);
        }
        return 0;
    }

    const bool chats = command == "optimize" || command == "extract" || command == "correct" ||
                       command == "run";
    PipelineConfig config = load_config(args.config_path);
    check_config_inputs(config, /*require_corpus=*/command != "ingest",
                        /*require_fixtures=*/chats);

    if (command == "ingest") {
        cmd_ingest(config, args.ingest_input, args.lenient);
        return 0;
    }

    PipelineContext ctx = make_context(std::move(config), args.options);
    if (command == "split") {
        cmd_split(ctx);
    } else if (command == "optimize") {
        cmd_optimize(ctx);
    } else if (command == "extract") {
        cmd_extract(ctx, args.options);
    } else if (command == "correct") {
        cmd_correct(ctx, args.options);
    } else if (command == "evaluate") {
        cmd_evaluate(ctx, args.options);
    } else if (command == "export") {
        std::optional<std::filesystem::path> output;
        if (args.output_path) output = *args.output_path;
        cmd_export(ctx, args.options, args.export_format, output);
    } else if (command == "run") {
        cmd_run(ctx, args.options);
    } else {
        throw ConfigError("unknown command: " + command);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyper-relational knowledge graph construction pipeline"};
    app.require_subcommand(1);

    CliArgs args;
    std::optional<std::size_t> limit;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* opt = cmd->add_option("--config", args.config_path, "pipeline config file (JSON)");
        if (needs_config) opt->required();
        cmd->add_flag("--mock", args.options.mock_all, "force all roles into mock mode");
        cmd->add_flag("--no-correct", args.options.no_correct, "skip the correction stage");
        cmd->add_option("--limit", limit, "process only the first N documents");
        cmd->add_option("--seed", seed, "override the split seed");
        cmd->add_option("--split", args.options.split_name,
                        "document split to operate on (train|dev|test|all)");
        cmd->add_option("--format", args.options.format, "output format (table|json)");
        cmd->add_flag("--normalize", args.options.normalize,
                      "fixed timestamp in reports (for reproducible output)");
    };

    auto* ingest = app.add_subcommand("ingest", "convert a HyperRED file to the corpus format");
    add_common(ingest);
    ingest->add_option("--input", args.ingest_input, "HyperRED JSON/JSONL file")->required();
    ingest->add_flag("--lenient", args.lenient, "skip malformed records instead of failing");

    add_common(app.add_subcommand("split", "write the deterministic train/dev/test split"));
    add_common(app.add_subcommand("optimize", "search prompt specs on the dev split"));
    add_common(app.add_subcommand("extract", "run the extraction stage"));
    add_common(app.add_subcommand("correct", "run the correction stage"));
    add_common(app.add_subcommand("evaluate", "score final facts against gold"));

    auto* exp = app.add_subcommand("export", "export the predicted graph");
    add_common(exp);
    exp->add_option("--export-format", args.export_format,
                    "graph format (canonical-json|flat-tsv)");
    std::string output;
    exp->add_option("--output", output, "write to file instead of stdout");

    add_common(app.add_subcommand("run", "extract, correct, and evaluate end to end"));

    auto* report = app.add_subcommand("report", "re-render a saved score report");
    add_common(report, /*needs_config=*/false);
    report->add_option("--report", args.report_path, "score report JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    args.options.limit = limit;
    args.options.seed_override = seed;
    if (!output.empty()) args.output_path = output;

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, args);
    } catch (const hrkg::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const hrkg::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 1;
    } catch (const hrkg::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const hrkg::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const hrkg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
}
