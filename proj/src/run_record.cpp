#include "hrkg/run_record.hpp"

#include <iostream>

#include "hrkg/errors.hpp"

namespace hrkg {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::extracted: return "extracted";
    case Stage::corrected: return "corrected";
    }
    return "?";
}

Stage parse_stage(std::string_view name) {
    if (name == "extracted") return Stage::extracted;
    if (name == "corrected") return Stage::corrected;
    throw ParseError("unknown run record stage \"" + std::string(name) + "\"");
}

std::string run_record_to_line(const RunRecord& record) {
    ordered_json j;
    j["doc_id"] = record.doc_id;
    j["stage"] = std::string(to_string(record.stage));
    j["prompt_digest"] = record.prompt_digest;
    j["raw_text"] = record.raw_text;
    auto facts = ordered_json::array();
    for (const auto& f : record.facts) facts.push_back(fact_to_json(f, /*with_provenance=*/true));
    j["facts"] = std::move(facts);
    j["diagnostics"] = record.diagnostics;
    j["wall_ms"] = record.wall_ms;
    return j.dump(); // single line
}

RunRecord run_record_from_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("run record is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("doc_id") || !j["doc_id"].is_string() ||
        !j.contains("stage") || !j["stage"].is_string()) {
        throw ParseError("run record is missing doc_id or stage");
    }
    RunRecord r;
    r.doc_id = j["doc_id"].get<std::string>();
    r.stage = parse_stage(j["stage"].get<std::string>());
    r.prompt_digest = j.value("prompt_digest", "");
    r.raw_text = j.value("raw_text", "");
    if (j.contains("facts")) {
        for (size_t i = 0; i < j["facts"].size(); ++i) {
            r.facts.push_back(fact_from_json(j["facts"][i], "facts[" + std::to_string(i) + "]"));
        }
    }
    if (j.contains("diagnostics")) r.diagnostics = j["diagnostics"];
    r.wall_ms = j.value("wall_ms", static_cast<std::int64_t>(0));
    return r;
}

RunRecordWriter::RunRecordWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw ConfigError("cannot open run record stream: " + path.string());
}

void RunRecordWriter::append(const RunRecord& record) {
    std::lock_guard lock(mutex_);
    out_ << run_record_to_line(record) << '\n';
    out_.flush();
}

RunLog scan_run_records(const std::filesystem::path& path) {
    RunLog log;
    std::ifstream in(path, std::ios::binary);
    if (!in) return log; // no stream yet: nothing completed

    std::string line;
    size_t line_no = 0;
    std::uintmax_t good_bytes = 0;
    bool torn = false;
    while (std::getline(in, line)) {
        ++line_no;
        const bool at_eof = in.peek() == std::ifstream::traits_type::eof();
        if (line.empty()) {
            good_bytes += 1;
            continue;
        }
        try {
            RunRecord r = run_record_from_line(line);
            log.records[{r.doc_id, r.stage}] = std::move(r);
            good_bytes += line.size() + 1;
        } catch (const Error& e) {
            if (at_eof) {
                torn = true;
                log.warnings.push_back("truncated torn final line " + std::to_string(line_no) +
                                       " of " + path.string());
                break;
            }
            throw ParseError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    in.close();
    if (torn) {
        std::filesystem::resize_file(path, good_bytes);
    }
    return log;
}

std::set<std::string> completed_doc_ids(const RunLog& log, Stage final_stage) {
    std::set<std::string> done;
    for (const auto& [key, record] : log.records) {
        if (key.second == final_stage) done.insert(key.first);
    }
    return done;
}

} // namespace hrkg
