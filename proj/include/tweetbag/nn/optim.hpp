#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tweetbag/nn/autograd.hpp"

namespace tweetbag::nn {

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t t = 0;
    // First and second moments, index-aligned with the parameter list passed
    // to adam_step. Sized on the first step.
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

/// One bias-corrected Adam update over `params`, then zeroes their grads:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2,
///   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// The same parameter list, in the same order, must be passed every step.
void adam_step(std::span<Parameter> params, AdamState& state);

void zero_grads(std::span<Parameter> params);

}  // namespace tweetbag::nn
