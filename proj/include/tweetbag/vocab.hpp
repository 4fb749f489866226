#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tweetbag/corpus.hpp"

namespace tweetbag {

using TokenId = std::uint32_t;

// Lowercases ASCII letters, splits on whitespace and emits each ASCII
// punctuation character as its own token.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnk = 1;

    // PAD and UNK only.
    Vocabulary();

    // `tokens` become indices 2, 3, ... in the given order. Duplicates and the
    // reserved spellings are rejected.
    explicit Vocabulary(std::vector<std::string> tokens, std::size_t min_freq = 1);

    std::size_t size() const { return tokens_.size(); }
    std::size_t min_freq() const { return min_freq_; }

    // kUnk for tokens that are not in the vocabulary.
    TokenId index_of(std::string_view token) const;
    std::optional<TokenId> find(std::string_view token) const;
    const std::string& token(TokenId id) const { return tokens_.at(id); }

    // All tokens in index order, reserved entries included.
    const std::vector<std::string>& tokens() const { return tokens_; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.tokens_ == b.tokens_ && a.min_freq_ == b.min_freq_;
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    std::size_t min_freq_ = 1;
};

// Tokens seen at least min_freq times, ordered by descending frequency and
// then ascending token.
Vocabulary build_vocab(std::span<const Tweet> corpus, std::size_t min_freq = 1);

struct EmbeddingMatrix {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> values;  // rows x dim, row-major
    std::size_t pretrained_rows = 0;  // rows copied from a vector file

    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

inline constexpr double kOovInitRange = 0.05;

// Every row drawn from U[-0.05, 0.05] in index order; the PAD row is zero.
EmbeddingMatrix random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

/// Seeds an embedding matrix from a plain-text .vec file ("<count> <dim>"
/// header, then "<token> <v1> ... <vdim>" per line).
///
/// Rows start from random_embeddings(vocab, dim, seed); vocabulary tokens
/// found in the file are overwritten with the file's vector (first occurrence
/// wins), and the PAD row stays zero. Every line is validated even when its
/// token is not in the vocabulary.
EmbeddingMatrix load_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                             std::size_t dim, std::uint64_t seed);

EmbeddingMatrix parse_vectors(std::string_view content, const Vocabulary& vocab, std::size_t dim,
                              std::uint64_t seed, const std::string& source = "<memory>");

// Exactly max_len ids: prefix-truncated, right-padded with kPad.
std::vector<TokenId> encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

}  // namespace tweetbag
