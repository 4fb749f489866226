#pragma once

#include <cstddef>

#include "tweetbag/nn/tensor.hpp"

namespace tweetbag {
class Rng;
}

namespace tweetbag::nn {

// U[-sqrt(6 / (fan_in + fan_out)), +sqrt(6 / (fan_in + fan_out))].
Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// U[-1/sqrt(units), +1/sqrt(units)]; used for recurrent weights.
Tensor scaled_uniform(Shape shape, std::size_t units, Rng& rng);

Tensor uniform(Shape shape, double bound, Rng& rng);

}  // namespace tweetbag::nn
