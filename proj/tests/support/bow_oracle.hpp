#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tweetbag/corpus.hpp"

namespace tweetbag::testing {

// Plain logistic regression on binary bag-of-words features, trained with
// full-batch gradient descent. Shares no code with the library's models.
class BowLogistic {
public:
    void fit(std::span<const Tweet> tweets, std::size_t iterations = 500, double lr = 0.5);
    double probability(const std::string& text) const;
    std::vector<Label> predict(std::span<const Tweet> tweets) const;

private:
    std::vector<std::size_t> features(const std::string& text) const;

    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> weights_;
    double bias_ = 0.0;
};

}  // namespace tweetbag::testing
