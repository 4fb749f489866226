#include "bow_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tweetbag::testing {

std::vector<std::size_t> BowLogistic::features(const std::string& text) const {
    std::istringstream in(text);
    std::vector<std::size_t> out;
    std::string word;
    while (in >> word) {
        auto it = index_.find(word);
        if (it != index_.end()) out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void BowLogistic::fit(std::span<const Tweet> tweets, std::size_t iterations, double lr) {
    index_.clear();
    for (const auto& t : tweets) {
        std::istringstream in(t.text);
        std::string word;
        while (in >> word) index_.emplace(word, index_.size());
    }
    weights_.assign(index_.size(), 0.0);
    bias_ = 0.0;

    std::vector<std::vector<std::size_t>> rows;
    for (const auto& t : tweets) rows.push_back(features(t.text));
    const double n = static_cast<double>(tweets.size());
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<double> gw(weights_.size(), 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double z = bias_;
            for (auto f : rows[i]) z += weights_[f];
            const double y = *tweets[i].label == Label::Informative ? 1.0 : 0.0;
            const double r = 1.0 / (1.0 + std::exp(-z)) - y;
            for (auto f : rows[i]) gw[f] += r;
            gb += r;
        }
        for (std::size_t f = 0; f < weights_.size(); ++f) weights_[f] -= lr * gw[f] / n;
        bias_ -= lr * gb / n;
    }
}

double BowLogistic::probability(const std::string& text) const {
    double z = bias_;
    for (auto f : features(text)) z += weights_[f];
    return 1.0 / (1.0 + std::exp(-z));
}

std::vector<Label> BowLogistic::predict(std::span<const Tweet> tweets) const {
    std::vector<Label> out;
    for (const auto& t : tweets)
        out.push_back(probability(t.text) >= 0.5 ? Label::Informative : Label::Uninformative);
    return out;
}

}  // namespace tweetbag::testing
