#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tweetbag/corpus.hpp"

namespace tweetbag::testing {

// Every text carries exactly one cue word drawn from the class's own cue
// list, surrounded by shared filler. Labels are therefore a function of a
// single token, so the corpus is linearly separable on bag-of-words.
struct SyntheticOptions {
    std::size_t count = 400;
    std::size_t positives = 200;  // exact number of Informative records
    std::size_t min_filler = 3;
    std::size_t max_filler = 8;
    std::string id_prefix = "s";
    std::uint64_t seed = 1;
};

std::vector<Tweet> separable_corpus(const SyntheticOptions& opts);

// Flips each label independently with probability `rate`.
std::vector<Tweet> with_label_noise(std::vector<Tweet> tweets, double rate, std::uint64_t seed);

// Records with only a label pattern, for split arithmetic.
std::vector<Tweet> labeled_stub_corpus(std::size_t count, std::size_t positives, std::uint64_t seed);

}  // namespace tweetbag::testing
