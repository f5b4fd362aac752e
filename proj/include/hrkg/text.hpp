#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hrkg::text {

// Unicode NFC via ICU. Input that is not valid UTF-8 is returned unchanged;
// the JSON parsing boundaries upstream already reject invalid UTF-8, so this
// only matters for raw byte strings fed in by tests.
std::string nfc(std::string_view s);

std::string trim(std::string_view s);

// Trim plus collapse of internal ASCII whitespace runs to a single space.
std::string collapse_whitespace(std::string_view s);

// NFC + trim + collapse: the normal form every fact field is stored in.
std::string normalize_field(std::string_view s);

// Backslash-escape the canonical-layout metacharacters `\`, `|`, `=`.
std::string escape_field(std::string_view s);

std::string to_lower_ascii(std::string_view s);

// ASCII case-insensitive substring test.
bool contains_ci(std::string_view haystack, std::string_view needle);

std::vector<std::string> split_whitespace(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);

std::string sha256_hex(std::string_view bytes);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

std::string iso8601_utc_now();

} // namespace hrkg::text
