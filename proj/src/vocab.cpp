#include "tweetbag/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "tweetbag/error.hpp"
#include "tweetbag/rng.hpp"

namespace tweetbag {
namespace {

constexpr std::string_view kPadToken = "<pad>";
constexpr std::string_view kUnkToken = "<unk>";

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) || (u >= 0x5B && u <= 0x60) ||
           (u >= 0x7B && u <= 0x7E);
}

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        if (i == line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        fields.push_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    };
    for (char c : text) {
        if (is_ascii_space(c)) {
            flush();
        } else if (is_ascii_punct(c)) {
            flush();
            tokens.emplace_back(1, c);
        } else {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
        }
    }
    flush();
    return tokens;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::size_t min_freq) : min_freq_(min_freq) {
    if (min_freq == 0) throw ConfigError("min_freq must be positive");
    tokens_.reserve(tokens.size() + 2);
    tokens_.emplace_back(kPadToken);
    tokens_.emplace_back(kUnkToken);
    index_.emplace(kPadToken, kPad);
    index_.emplace(kUnkToken, kUnk);
    for (auto& tok : tokens) {
        const auto id = static_cast<TokenId>(tokens_.size());
        if (!index_.emplace(tok, id).second)
            throw Error("vocabulary token '" + tok + "' is duplicated or reserved");
        tokens_.push_back(std::move(tok));
    }
}

TokenId Vocabulary::index_of(std::string_view token) const {
    return find(token).value_or(kUnk);
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary build_vocab(std::span<const Tweet> corpus, std::size_t min_freq) {
    if (min_freq == 0) throw ConfigError("min_freq must be positive");
    std::map<std::string, std::size_t> counts;
    for (const auto& tweet : corpus) {
        for (auto& tok : tokenize(tweet.text)) ++counts[std::move(tok)];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [tok, n] : counts) {
        if (n >= min_freq) kept.emplace_back(tok, n);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    tokens.reserve(kept.size());
    for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
    return Vocabulary(std::move(tokens), min_freq);
}

EmbeddingMatrix random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
    EmbeddingMatrix m;
    m.rows = vocab.size();
    m.dim = dim;
    m.values.resize(m.rows * dim);
    Rng rng(seed);
    for (auto& v : m.values) v = rng.uniform(-kOovInitRange, kOovInitRange);
    std::fill_n(m.values.begin(), dim, 0.0);
    return m;
}

EmbeddingMatrix parse_vectors(std::string_view content, const Vocabulary& vocab, std::size_t dim,
                              std::uint64_t seed, const std::string& source) {
    EmbeddingMatrix m = random_embeddings(vocab, dim, seed);
    std::vector<bool> filled(vocab.size(), false);

    std::size_t line_no = 0;
    std::size_t start = 0;
    bool saw_header = false;
    while (start < content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto fields = split_spaces(line);

        if (!saw_header) {
            std::size_t count = 0;
            std::size_t file_dim = 0;
            if (fields.size() != 2 || !parse_number(fields[0], count) ||
                !parse_number(fields[1], file_dim)) {
                throw ParseError(source, line_no, "expected '<count> <dim>' header");
            }
            if (file_dim != dim) {
                throw ParseError(source, line_no,
                                 "vector dimension " + std::to_string(file_dim) +
                                     " does not match requested " + std::to_string(dim));
            }
            saw_header = true;
            continue;
        }
        if (fields.empty()) continue;
        if (fields.size() != dim + 1) {
            throw ParseError(source, line_no,
                             "expected token and " + std::to_string(dim) + " values, found " +
                                 std::to_string(fields.size() - 1) + " values");
        }
        const auto id = vocab.find(fields[0]);
        const bool take = id && *id != Vocabulary::kPad && !filled[*id];
        for (std::size_t k = 0; k < dim; ++k) {
            double v = 0.0;
            if (!parse_number(fields[k + 1], v) || !std::isfinite(v))
                throw ParseError(source, line_no, "bad value '" + std::string(fields[k + 1]) + "'");
            if (take) m.values[*id * dim + k] = v;
        }
        if (take) {
            filled[*id] = true;
            ++m.pretrained_rows;
        }
    }
    if (!saw_header) throw ParseError(source, 1, "empty vector file");
    return m;
}

EmbeddingMatrix load_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                             std::size_t dim, std::uint64_t seed) {
    return parse_vectors(read_file(path), vocab, dim, seed, path.string());
}

std::vector<TokenId> encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
    std::vector<TokenId> ids(max_len, Vocabulary::kPad);
    const auto tokens = tokenize(text);
    const std::size_t n = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.index_of(tokens[i]);
    return ids;
}

}  // namespace tweetbag
