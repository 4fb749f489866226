#include "synthetic.hpp"

#include <array>
#include <string_view>

#include "tweetbag/rng.hpp"

namespace tweetbag::testing {

namespace {

constexpr std::array<std::string_view, 6> kInformativeCues{"cases", "deaths", "confirmed",
                                                            "tested", "hospitalized", "recovered"};
constexpr std::array<std::string_view, 6> kUninformativeCues{"pray", "blessed", "hope",
                                                              "lockdown", "bored", "vibes"};
constexpr std::array<std::string_view, 16> kFiller{"the",  "a",     "today", "we",   "all",   "news",
                                                   "city", "people", "in",   "this", "from",  "new",
                                                   "now",  "our",   "week",  "just"};

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& words, Rng& rng) {
    return words[rng.below(N)];
}

}  // namespace

std::vector<Tweet> separable_corpus(const SyntheticOptions& opts) {
    Rng rng(opts.seed);
    std::vector<bool> positive(opts.count, false);
    for (std::size_t i = 0; i < opts.positives && i < opts.count; ++i) positive[i] = true;
    rng.shuffle(positive);

    std::vector<Tweet> out;
    out.reserve(opts.count);
    for (std::size_t i = 0; i < opts.count; ++i) {
        const auto filler = opts.min_filler + rng.below(opts.max_filler - opts.min_filler + 1);
        const auto cue_at = rng.below(filler + 1);
        std::string text;
        for (std::size_t w = 0; w <= filler; ++w) {
            if (!text.empty()) text += ' ';
            if (w == cue_at) {
                text += positive[i] ? pick(kInformativeCues, rng) : pick(kUninformativeCues, rng);
            } else {
                text += pick(kFiller, rng);
            }
        }
        out.push_back({opts.id_prefix + std::to_string(i), std::move(text),
                       positive[i] ? Label::Informative : Label::Uninformative});
    }
    return out;
}

std::vector<Tweet> with_label_noise(std::vector<Tweet> tweets, double rate, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& t : tweets) {
        if (t.label && rng.bernoulli(rate)) {
            t.label = *t.label == Label::Informative ? Label::Uninformative : Label::Informative;
        }
    }
    return tweets;
}

std::vector<Tweet> labeled_stub_corpus(std::size_t count, std::size_t positives, std::uint64_t seed) {
    SyntheticOptions opts;
    opts.count = count;
    opts.positives = positives;
    opts.min_filler = 0;
    opts.max_filler = 2;
    opts.seed = seed;
    return separable_corpus(opts);
}

}  // namespace tweetbag::testing
