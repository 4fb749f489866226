#include "tweetbag/preprocess.hpp"

#include <array>

namespace tweetbag {
namespace {

constexpr std::array<std::string_view, 2> kTags = {"HTTPURL", "@USER"};

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

void delete_tags(std::string& s) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto tag : kTags) {
            std::size_t pos = 0;
            while ((pos = s.find(tag, pos)) != std::string::npos) {
                s.erase(pos, tag.size());
                changed = true;
            }
        }
    }
}

}  // namespace

std::string clean(std::string_view text) {
    std::string s;
    s.reserve(text.size());
    for (char c : text) {
        const auto byte = static_cast<unsigned char>(c);
        if (byte >= 0x80) continue;
        s.push_back((c == '\n' || c == '\t' || c == '\r') ? ' ' : c);
    }

    delete_tags(s);

    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

CleanReport clean_corpus(std::span<const Tweet> tweets) {
    CleanReport report;
    report.tweets.reserve(tweets.size());
    for (const auto& t : tweets) {
        Tweet cleaned{t.id, clean(t.text), t.label};
        if (cleaned.text.empty()) ++report.emptied;
        report.tweets.push_back(std::move(cleaned));
    }
    return report;
}

}  // namespace tweetbag
