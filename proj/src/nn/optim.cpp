#include "tweetbag/nn/optim.hpp"

#include <cmath>

#include "tweetbag/error.hpp"

namespace tweetbag::nn {

void adam_step(std::span<Parameter> params, AdamState& state) {
    if (state.m.empty()) {
        for (auto& p : params) {
            state.m.emplace_back(p.shape());
            state.v.emplace_back(p.shape());
        }
    }
    if (state.m.size() != params.size()) throw Error("adam_step: parameter list changed between steps");

    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& value = params[k].value();
        auto& grad = params[k].grad();
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (m.shape() != value.shape()) throw ShapeError("adam_step: moment shape mismatch");
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            value[i] -= state.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.epsilon);
        }
        grad.fill(0.0);
    }
}

void zero_grads(std::span<Parameter> params) {
    for (auto& p : params) p.zero_grad();
}

}  // namespace tweetbag::nn
