#include "tweetbag/metrics.hpp"

#include <string>

#include "tweetbag/error.hpp"

namespace tweetbag {

double f1_from_pr(double precision, double recall) {
    const double denom = precision + recall;
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

Metrics evaluate(std::span<const Label> predicted, std::span<const Label> gold) {
    if (predicted.size() != gold.size()) {
        throw Error("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(gold.size()) + " gold labels");
    }
    if (gold.empty()) throw Error("evaluate: no instances");
    Metrics m;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool pred_pos = predicted[i] == Label::Informative;
        const bool gold_pos = gold[i] == Label::Informative;
        if (pred_pos && gold_pos) ++m.tp;
        else if (pred_pos) ++m.fp;
        else if (gold_pos) ++m.fn;
        else ++m.tn;
    }
    m.precision = (m.tp + m.fp) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = f1_from_pr(m.precision, m.recall);
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
    return m;
}

}  // namespace tweetbag
