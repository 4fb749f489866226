#include "tweetbag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "tweetbag/error.hpp"
#include "tweetbag/rng.hpp"

namespace tweetbag {
namespace {

constexpr std::string_view kLabeledHeader = "Id\tText\tLabel";
constexpr std::string_view kUnlabeledHeader = "Id\tText";
constexpr std::string_view kPredictionHeader = "Id\tLabel";

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

// Calls fn(line_number, line) for every line with the terminator (and a
// trailing CR) removed. A final empty segment after the last newline is not
// reported.
template <class Fn>
void for_each_line(std::string_view content, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        fn(++line_no, line);
        start = end + 1;
    }
}

std::string_view strip_bom(std::string_view content) {
    if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
    return content;
}

void check_writable_field(std::string_view field, std::string_view what) {
    if (field.find_first_of("\t\r\n") != std::string_view::npos)
        throw Error("cannot write " + std::string(what) + " containing a tab or line break");
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

std::string_view to_string(Label label) {
    return label == Label::Informative ? "INFORMATIVE" : "UNINFORMATIVE";
}

std::optional<Label> parse_label(std::string_view text) {
    auto equals_ci = [](std::string_view a, std::string_view b) {
        return a.size() == b.size() &&
               std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                   auto lower = [](char c) {
                       return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
                   };
                   return lower(x) == lower(y);
               });
    };
    if (equals_ci(text, "INFORMATIVE")) return Label::Informative;
    if (equals_ci(text, "UNINFORMATIVE")) return Label::Uninformative;
    return std::nullopt;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<Tweet> parse_tsv(std::string_view content, bool labeled, const std::string& source) {
    const std::size_t columns = labeled ? 3 : 2;
    const std::string_view header = labeled ? kLabeledHeader : kUnlabeledHeader;

    std::vector<Tweet> tweets;
    std::unordered_set<std::string> seen;
    for_each_line(strip_bom(content), [&](std::size_t line_no, std::string_view line) {
        if (line_no == 1 && line == header) return;
        if (line.empty()) return;
        const auto fields = split_tabs(line);
        if (fields.size() != columns) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(columns) + " tab-separated fields, found " +
                                 std::to_string(fields.size()));
        }
        Tweet tweet;
        tweet.id = std::string(fields[0]);
        tweet.text = std::string(fields[1]);
        if (tweet.id.empty()) throw ParseError(source, line_no, "empty id");
        if (labeled) {
            tweet.label = parse_label(fields[2]);
            if (!tweet.label)
                throw ParseError(source, line_no, "unknown label '" + std::string(fields[2]) + "'");
        }
        if (!seen.insert(tweet.id).second)
            throw ParseError(source, line_no, "duplicate id '" + tweet.id + "'");
        tweets.push_back(std::move(tweet));
    });
    return tweets;
}

std::vector<Tweet> load_tsv(const std::filesystem::path& path, bool labeled) {
    return parse_tsv(read_file(path), labeled, path.string());
}

void write_tsv(const std::filesystem::path& path, std::span<const Tweet> tweets, bool labeled) {
    auto out = open_for_write(path);
    out << (labeled ? kLabeledHeader : kUnlabeledHeader) << '\n';
    for (const auto& tweet : tweets) {
        check_writable_field(tweet.id, "id");
        check_writable_field(tweet.text, "text");
        out << tweet.id << '\t' << tweet.text;
        if (labeled) {
            if (!tweet.label) throw Error("record '" + tweet.id + "' has no label");
            out << '\t' << to_string(*tweet.label);
        }
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<Tweet> merge_global(std::span<const Tweet> train, std::span<const Tweet> val) {
    std::unordered_set<std::string> ids;
    for (const auto& t : train) ids.insert(t.id);
    for (const auto& t : val) {
        if (ids.contains(t.id)) throw Error("id '" + t.id + "' appears in both train and validation");
    }
    std::vector<Tweet> global;
    global.reserve(train.size() + val.size());
    global.insert(global.end(), train.begin(), train.end());
    global.insert(global.end(), val.begin(), val.end());
    return global;
}

std::size_t train_split_size(std::size_t n) { return (7 * n + 4) / 8; }

SplitPair shuffle_split(std::span<const Tweet> global, std::uint64_t seed) {
    if (global.size() < 8)
        throw Error("shuffle_split needs at least 8 records, got " + std::to_string(global.size()));
    std::vector<std::size_t> order(global.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t n_train = train_split_size(global.size());
    SplitPair split;
    split.seed = seed;
    split.train.reserve(n_train);
    split.val.reserve(global.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? split.train : split.val).push_back(global[order[i]]);
    }
    return split;
}

std::vector<SplitPair> make_bag_splits(std::span<const Tweet> global,
                                       std::span<const std::uint64_t> seeds) {
    std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
    if (distinct.size() != seeds.size()) throw Error("bag seeds must be distinct");
    std::vector<SplitPair> splits;
    splits.reserve(seeds.size());
    for (auto seed : seeds) splits.push_back(shuffle_split(global, seed));
    return splits;
}

std::size_t count_label(std::span<const Tweet> tweets, Label label) {
    return static_cast<std::size_t>(std::count_if(
        tweets.begin(), tweets.end(), [label](const Tweet& t) { return t.label == label; }));
}

void write_predictions(const std::filesystem::path& path, std::span<const std::string> ids,
                       std::span<const Label> labels, bool header) {
    if (ids.size() != labels.size()) {
        throw Error("write_predictions: " + std::to_string(ids.size()) + " ids but " +
                    std::to_string(labels.size()) + " labels");
    }
    auto out = open_for_write(path);
    if (header) out << kPredictionHeader << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
        check_writable_field(ids[i], "id");
        out << ids[i] << '\t' << to_string(labels[i]) << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::pair<std::string, Label>> load_predictions(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    const std::string source = path.string();
    std::vector<std::pair<std::string, Label>> rows;
    for_each_line(strip_bom(content), [&](std::size_t line_no, std::string_view line) {
        if (line_no == 1 && line == kPredictionHeader) return;
        if (line.empty()) return;
        const auto fields = split_tabs(line);
        if (fields.size() != 2)
            throw ParseError(source, line_no, "expected 2 tab-separated fields");
        auto label = parse_label(fields[1]);
        if (!label) throw ParseError(source, line_no, "unknown label '" + std::string(fields[1]) + "'");
        rows.emplace_back(std::string(fields[0]), *label);
    });
    return rows;
}

}  // namespace tweetbag
