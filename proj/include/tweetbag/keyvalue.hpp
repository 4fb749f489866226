#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tweetbag {

// Ordered "key=value" lines. Keys may repeat.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Blank lines and lines starting with '#' are skipped; whitespace around keys
// and values is trimmed. A line without '=' is a ParseError.
KeyValues parse_key_values(std::string_view content, const std::string& source = "<memory>");
KeyValues read_key_values(const std::filesystem::path& path);

std::string format_key_values(const KeyValues& entries);
void write_key_values(const std::filesystem::path& path, const KeyValues& entries);

// Last value for `key`, or nullptr.
const std::string* find_value(const KeyValues& entries, std::string_view key);

// Fixed-precision formatting used for every metric written to disk.
std::string format_double(double v);

}  // namespace tweetbag
