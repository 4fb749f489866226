#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "tweetbag/nn/autograd.hpp"

namespace tweetbag::nn {

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t worst_parameter = 0;
    std::size_t worst_index = 0;
    double analytic = 0.0;  // at the worst coordinate
    double numeric = 0.0;
};

/// Compares reverse-mode gradients of the scalar `fn` against central
/// differences (f(x+h) - f(x-h)) / 2h for every coordinate of every input.
/// Per-coordinate error is |a - n| / max(|a|, |n|, 1e-8).
///
/// `fn` must rebuild its graph on each call and be deterministic. Input grads
/// are zero on return.
GradCheckReport check_gradients(const std::function<Var()>& fn, std::span<Parameter> inputs,
                                double h = 1e-5);

}  // namespace tweetbag::nn
