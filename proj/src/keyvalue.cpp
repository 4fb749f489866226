#include "tweetbag/keyvalue.hpp"

#include <cstdio>
#include <fstream>

#include "tweetbag/corpus.hpp"
#include "tweetbag/error.hpp"

namespace tweetbag {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

KeyValues parse_key_values(std::string_view content, const std::string& source) {
    KeyValues out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        const auto line = trim(content.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key=value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(source, line_no, "empty key");
        out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
    }
    return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    return parse_key_values(read_file(path), path.string());
}

std::string format_key_values(const KeyValues& entries) {
    std::string out;
    for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
    return out;
}

void write_key_values(const std::filesystem::path& path, const KeyValues& entries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << format_key_values(entries);
    if (!out) throw Error("write failed: " + path.string());
}

const std::string* find_value(const KeyValues& entries, std::string_view key) {
    const std::string* found = nullptr;
    for (const auto& [k, v] : entries) {
        if (k == key) found = &v;
    }
    return found;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace tweetbag
