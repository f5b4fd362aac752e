#include "hrkg/text.hpp"

#include <openssl/evp.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>

#include <array>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

namespace hrkg::text {

namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

} // namespace

std::string nfc(std::string_view s) {
    if (s.empty()) return {};

    UErrorCode status = U_ZERO_ERROR;
    const UNormalizer2* norm = unorm2_getNFCInstance(&status);
    if (U_FAILURE(status)) return std::string(s);

    // UTF-8 -> UTF-16
    std::vector<UChar> u16(s.size() + 1);
    int32_t u16len = 0;
    status = U_ZERO_ERROR;
    u_strFromUTF8(u16.data(), static_cast<int32_t>(u16.size()), &u16len,
                  s.data(), static_cast<int32_t>(s.size()), &status);
    if (U_FAILURE(status)) return std::string(s); // not valid UTF-8: leave bytes alone

    std::vector<UChar> out(static_cast<size_t>(u16len) * 2 + 16);
    status = U_ZERO_ERROR;
    int32_t outlen = unorm2_normalize(norm, u16.data(), u16len,
                                      out.data(), static_cast<int32_t>(out.size()), &status);
    if (status == U_BUFFER_OVERFLOW_ERROR) {
        out.resize(static_cast<size_t>(outlen) + 1);
        status = U_ZERO_ERROR;
        outlen = unorm2_normalize(norm, u16.data(), u16len,
                                  out.data(), static_cast<int32_t>(out.size()), &status);
    }
    if (U_FAILURE(status)) return std::string(s);

    // UTF-16 -> UTF-8
    std::string result(static_cast<size_t>(outlen) * 4 + 4, '\0');
    int32_t u8len = 0;
    status = U_ZERO_ERROR;
    u_strToUTF8(result.data(), static_cast<int32_t>(result.size()), &u8len,
                out.data(), outlen, &status);
    if (U_FAILURE(status)) return std::string(s);
    result.resize(static_cast<size_t>(u8len));
    return result;
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(s[b])) ++b;
    while (e > b && is_ascii_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_run = false;
    for (char c : s) {
        if (is_ascii_space(c)) {
            in_run = true;
            continue;
        }
        if (in_run && !out.empty()) out.push_back(' ');
        in_run = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_field(std::string_view s) {
    return collapse_whitespace(nfc(s));
}

std::string escape_field(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\' || c == '|' || c == '=') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return to_lower_ascii(haystack).find(to_lower_ascii(needle)) != std::string::npos;
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_ascii_space(s[i])) ++i;
        size_t start = i;
        while (i < s.size() && !is_ascii_space(s[i])) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::string iso8601_utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

} // namespace hrkg::text
