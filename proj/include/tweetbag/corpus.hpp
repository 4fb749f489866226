#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tweetbag {

// Informative is the positive class for every metric.
enum class Label { Informative, Uninformative };

// "INFORMATIVE" / "UNINFORMATIVE".
std::string_view to_string(Label label);

// Case-insensitive. Returns nullopt for anything else.
std::optional<Label> parse_label(std::string_view text);

struct Tweet {
    std::string id;
    std::string text;
    std::optional<Label> label;

    friend bool operator==(const Tweet&, const Tweet&) = default;
};

struct SplitPair {
    std::vector<Tweet> train;
    std::vector<Tweet> val;
    std::uint64_t seed = 0;
};

/// Reads a shared-task TSV file.
///
/// Labeled files carry three tab-separated columns (Id, Text, Label), unlabeled
/// files two. A first line equal to "Id\tText\tLabel" (labeled) or "Id\tText"
/// is treated as a header and skipped. CRLF line endings and completely blank
/// lines are tolerated; any other malformed line raises ParseError carrying its
/// 1-based line number. Ids must be nonempty and unique.
std::vector<Tweet> load_tsv(const std::filesystem::path& path, bool labeled);

// Same format rules as load_tsv, parsing from memory. `source` names the input
// in error messages.
std::vector<Tweet> parse_tsv(std::string_view content, bool labeled,
                             const std::string& source = "<memory>");

// Writes with a header line. Text must not contain tabs or line breaks.
void write_tsv(const std::filesystem::path& path, std::span<const Tweet> tweets, bool labeled);

// Training records followed by validation records. Ids must not collide.
std::vector<Tweet> merge_global(std::span<const Tweet> train, std::span<const Tweet> val);

// round(n * 7 / 8), half-up.
std::size_t train_split_size(std::size_t n);

/// Seeded unstratified shuffle of the global pool into a 7:1 train/val split.
/// The first train_split_size(n) records of the permutation go to train.
/// Requires at least 8 records.
SplitPair shuffle_split(std::span<const Tweet> global, std::uint64_t seed);

// One shuffle_split per seed. Seeds must be distinct.
std::vector<SplitPair> make_bag_splits(std::span<const Tweet> global,
                                       std::span<const std::uint64_t> seeds);

std::size_t count_label(std::span<const Tweet> tweets, Label label);

// TSV "Id\tLabel", one line per instance in input order.
void write_predictions(const std::filesystem::path& path, std::span<const std::string> ids,
                       std::span<const Label> labels, bool header = true);

std::vector<std::pair<std::string, Label>> load_predictions(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace tweetbag
