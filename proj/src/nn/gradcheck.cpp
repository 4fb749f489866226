#include "tweetbag/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tweetbag/nn/optim.hpp"

namespace tweetbag::nn {

GradCheckReport check_gradients(const std::function<Var()>& fn, std::span<Parameter> inputs, double h) {
    zero_grads(inputs);
    backward(fn());
    std::vector<Tensor> analytic;
    analytic.reserve(inputs.size());
    for (auto& p : inputs) analytic.push_back(p.grad());
    zero_grads(inputs);

    GradCheckReport report;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto& value = inputs[k].value();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + h;
            const double up = fn().value()[0];
            value[i] = saved - h;
            const double down = fn().value()[0];
            value[i] = saved;

            const double n = (up - down) / (2.0 * h);
            const double a = analytic[k][i];
            const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
            if (err > report.max_relative_error) {
                report = {err, k, i, a, n};
            }
        }
    }
    zero_grads(inputs);
    return report;
}

}  // namespace tweetbag::nn
