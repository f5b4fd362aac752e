#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrkg/fact.hpp"

namespace hrkg {

enum class Stage { extracted, corrected };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);

// One line of the append-only JSONL run stream: the full audit trail of a
// document passing through one pipeline stage.
struct RunRecord {
    std::string doc_id;
    Stage stage = Stage::extracted;
    std::string prompt_digest;
    std::string raw_text;
    std::vector<HyperRelationalFact> facts;
    nlohmann::ordered_json diagnostics;
    std::int64_t wall_ms = 0;
};

std::string run_record_to_line(const RunRecord& record);
RunRecord run_record_from_line(std::string_view line);

// Serialized appender; one line per record, flushed per append.
class RunRecordWriter {
public:
    explicit RunRecordWriter(const std::filesystem::path& path);
    void append(const RunRecord& record);

private:
    std::mutex mutex_;
    std::ofstream out_;
    std::filesystem::path path_;
};

struct RunLog {
    std::map<std::pair<std::string, Stage>, RunRecord> records;
    std::vector<std::string> warnings;
};

// Scans a records stream. A torn final line (interrupted write) is truncated
// from the file with a warning; a corrupted non-final line is an error that
// names the line number.
RunLog scan_run_records(const std::filesystem::path& path);

// Documents whose final-stage record exists and can be skipped on re-run.
std::set<std::string> completed_doc_ids(const RunLog& log, Stage final_stage);

} // namespace hrkg
