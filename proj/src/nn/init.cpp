#include "tweetbag/nn/init.hpp"

#include <cmath>

#include "tweetbag/rng.hpp"

namespace tweetbag::nn {

Tensor uniform(Shape shape, double bound, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
}

Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    return uniform(std::move(shape), std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

Tensor scaled_uniform(Shape shape, std::size_t units, Rng& rng) {
    return uniform(std::move(shape), 1.0 / std::sqrt(static_cast<double>(units)), rng);
}

}  // namespace tweetbag::nn
