#pragma once

#include <cstddef>
#include <span>

#include "tweetbag/corpus.hpp"

namespace tweetbag {

// Scores on the positive (Informative) class.
struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
};

// Harmonic mean 2pr / (p + r); 0 when p + r = 0.
double f1_from_pr(double precision, double recall);

// Zero-denominator conventions: P = 0 without predicted positives, R = 0
// without gold positives. Lengths must match and be nonzero.
Metrics evaluate(std::span<const Label> predicted, std::span<const Label> gold);

}  // namespace tweetbag
