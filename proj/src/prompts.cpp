#include "hrkg/prompts.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hrkg/errors.hpp"

namespace hrkg {

using nlohmann::json;

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            size_t close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto name = std::string(tmpl.substr(i + 1, close - i - 1));
                auto it = values.find(name);
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

std::pair<std::string, std::string> choose_sentinels(const std::vector<std::string>& texts) {
    for (int n = 0;; ++n) {
        std::string tag = n == 0 ? "INPUT" : "INPUT" + std::to_string(n);
        std::string open = "<<<" + tag;
        std::string close = tag + ">>>";
        bool clash = false;
        for (const auto& t : texts) {
            if (t.find(open) != std::string::npos || t.find(close) != std::string::npos) {
                clash = true;
                break;
            }
        }
        if (!clash) return {std::move(open), std::move(close)};
    }
}

namespace {

const char* kExtractionUserTemplate =
    "{exemplars}Extract the hyper-relational facts from the following input.\n"
    "\n"
    "{input}\n"
    "\n"
    "Reply with the JSON array of facts only.";

const char* kCorrectionSystem =
    "You review hyper-relational facts that were extracted from a source text. "
    "Correct wrong subjects, relations, objects, or qualifiers, fix any formatting "
    "problems, and remove facts the text does not support. Reply with the full "
    "corrected JSON array only. Each element must be an object with string fields "
    "\"subject\", \"relation\", \"object\" and an optional \"qualifiers\" array of "
    "objects with string fields \"key\" and \"value\".";

const char* kCorrectionUserTemplate =
    "Source text:\n"
    "{input}\n"
    "\n"
    "Current facts:\n"
    "{facts}\n"
    "\n"
    "Return the full corrected JSON array of facts.";

const char* kSchemaNote =
    "Respond with a JSON array only. Each element must be an object with string "
    "fields \"subject\", \"relation\", \"object\" and an optional \"qualifiers\" "
    "array of objects with string fields \"key\" and \"value\". Output at most "
    "{budget} facts and no commentary.";

const char* kReaskReminder =
    "Your previous reply could not be parsed. Reply with ONLY a valid JSON array "
    "of fact objects as specified, with no surrounding text.";

const char* kDefaultInstructions[] = {
    "You extract hyper-relational facts from text. A fact is a subject entity, a "
    "relation, an object entity, and zero or more qualifier key-value pairs that "
    "contextualize the base triple, such as a time, a place, or a degree. Extract "
    "every fact the text states directly.",
    "You are an information extraction system for hyper-relational knowledge "
    "graphs. Read the input carefully, think through which statements express a "
    "relation between two entities and which extra details qualify that relation, "
    "then output only the final JSON array of facts.",
    "Extract (subject, relation, object) triples with qualifier key-value pairs "
    "from the input text. Use entity names exactly as written in the text.",
};

std::string read_file_if_exists(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

PromptBank PromptBank::defaults() {
    PromptBank bank;
    bank.extraction_user_template = kExtractionUserTemplate;
    bank.correction_system = kCorrectionSystem;
    bank.correction_user_template = kCorrectionUserTemplate;
    bank.schema_note = kSchemaNote;
    bank.reask_reminder = kReaskReminder;
    for (const char* instruction : kDefaultInstructions) {
        bank.instructions.emplace_back(instruction);
    }
    return bank;
}

PromptBank PromptBank::load(const std::filesystem::path& dir) {
    PromptBank bank = defaults();
    if (dir.empty() || !std::filesystem::is_directory(dir)) return bank;

    if (auto s = read_file_if_exists(dir / "extraction_user.txt"); !s.empty()) {
        bank.extraction_user_template = s;
    }
    if (auto s = read_file_if_exists(dir / "correction_system.txt"); !s.empty()) {
        bank.correction_system = s;
    }
    if (auto s = read_file_if_exists(dir / "correction_user.txt"); !s.empty()) {
        bank.correction_user_template = s;
    }
    auto instructions_text = read_file_if_exists(dir / "instructions.json");
    if (!instructions_text.empty()) {
        json doc;
        try {
            doc = json::parse(instructions_text);
        } catch (const json::parse_error& e) {
            throw ConfigError((dir / "instructions.json").string() + ": invalid JSON: " +
                              e.what());
        }
        if (doc.contains("schema_note") && doc["schema_note"].is_string()) {
            bank.schema_note = doc["schema_note"].get<std::string>();
        }
        if (doc.contains("reask_reminder") && doc["reask_reminder"].is_string()) {
            bank.reask_reminder = doc["reask_reminder"].get<std::string>();
        }
        if (doc.contains("instructions")) {
            if (!doc["instructions"].is_array() || doc["instructions"].empty()) {
                throw ConfigError((dir / "instructions.json").string() +
                                  ": \"instructions\" must be a non-empty array");
            }
            bank.instructions.clear();
            for (const auto& item : doc["instructions"]) {
                if (!item.is_string()) {
                    throw ConfigError((dir / "instructions.json").string() +
                                      ": instruction is not a string");
                }
                bank.instructions.push_back(item.get<std::string>());
            }
        }
    }
    return bank;
}

} // namespace hrkg
