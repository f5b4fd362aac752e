#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hrkg {

// Single-pass {placeholder} substitution: values are inserted verbatim and
// never rescanned, so placeholder-looking text inside documents stays inert.
// Unknown placeholders are left as-is.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values);

// Sentinel lines framing inserted text ("<<<INPUT" / "INPUT>>>"), escalated
// (INPUT1, INPUT2, ...) until they collide with none of the inserted texts.
std::pair<std::string, std::string> choose_sentinels(const std::vector<std::string>& texts);

// Plain-text prompt templates plus the instruction bank the optimizer
// searches over. Templates use {instruction}, {exemplars}, {input},
// {facts}, {budget} placeholders. Files in the bank directory override the
// built-in defaults one by one:
//   extraction_user.txt, correction_system.txt, correction_user.txt,
//   instructions.json ({"schema_note": ..., "instructions": [...]})
struct PromptBank {
    std::string extraction_user_template;
    std::string correction_system;
    std::string correction_user_template;
    std::vector<std::string> instructions;
    std::string schema_note;
    std::string reask_reminder;

    static PromptBank defaults();
    static PromptBank load(const std::filesystem::path& dir);
};

} // namespace hrkg
