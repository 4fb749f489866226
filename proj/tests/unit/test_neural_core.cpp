#include <doctest.h>

#include <cmath>
#include <numeric>

#include "grad_cases.hpp"
#include "tweetbag/error.hpp"
#include "tweetbag/nn/autograd.hpp"
#include "tweetbag/nn/gradcheck.hpp"
#include "tweetbag/nn/init.hpp"
#include "tweetbag/nn/ops.hpp"
#include "tweetbag/nn/optim.hpp"
#include "tweetbag/rng.hpp"

using namespace tweetbag;
using namespace tweetbag::nn;

namespace {

Var constant(Shape s, std::vector<double> v) { return Var(Tensor(std::move(s), std::move(v))); }

Mask full_mask(std::size_t B, std::size_t T) { return Mask{B, T, std::vector<std::uint8_t>(B * T, 1)}; }

}  // namespace

TEST_CASE("tensor basics") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.at(1, 2) == 1.5);
    CHECK(shape_string(t.shape()) == "[2x3]");
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(t.reshaped({4}), ShapeError);
    t[0] = std::nan("");
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("dense oracles") {
    auto x = constant({1, 2}, {1, 2});
    auto W = constant({2, 1}, {1, 1});
    auto b = constant({1}, {1});
    CHECK(dense(x, W, b).value()[0] == 4.0);

    auto eye = constant({2, 2}, {1, 0, 0, 1});
    auto x2 = constant({2, 2}, {3, -1, 0.5, 2});
    CHECK(dense(x2, eye, constant({2}, {0, 0})).value() == x2.value());

    Parameter bias(Tensor({3}));
    Parameter weights(Tensor({2, 3}, 0.3));
    backward(sum(dense(constant({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}), weights, bias)));
    // Gradient of a sum wrt the bias counts the batch rows.
    for (double g : bias.grad().values()) CHECK(g == 4.0);

    CHECK_THROWS_AS(dense(x, constant({3, 1}, {1, 1, 1}), b), ShapeError);
}

TEST_CASE("conv1d_maxpool oracles") {
    auto filt1 = constant({1, 1, 1}, {1});
    auto zero_bias = constant({1}, {0});
    CHECK(conv1d_maxpool(constant({1, 3, 1}, {3, -1, 5}), filt1, zero_bias).value()[0] == 5.0);

    auto zeros = constant({2, 1, 2}, {0, 0, 0, 0});
    auto out = conv1d_maxpool(constant({1, 4, 1}, {1, -2, 3, 4}), zeros, constant({2}, {0, 0}));
    CHECK(out.value() == Tensor({1, 2}));

    auto filt2 = constant({2, 1, 1}, {1, 1});
    CHECK(conv1d_maxpool(constant({1, 3, 1}, {1, 2, 3}), filt2, zero_bias).value()[0] == 5.0);

    CHECK_THROWS_AS(conv1d_maxpool(constant({1, 1, 1}, {1}), filt2, zero_bias), ShapeError);
}

TEST_CASE("lstm_step oracles") {
    const std::size_t u = 2, d = 3;
    LstmWeights w{Var(Tensor({d, 4 * u})), Var(Tensor({u, 4 * u})), Var(Tensor({4 * u}))};
    auto x = Var(Tensor({1, d}, 0.7));

    auto s0 = lstm_step(x, {Var(Tensor({1, u})), Var(Tensor({1, u}))}, w);
    for (double v : s0.h.value().values()) CHECK(v == 0.0);
    for (double v : s0.c.value().values()) CHECK(v == 0.0);

    const double c = 1.3;
    auto s1 = lstm_step(x, {Var(Tensor({1, u})), Var(Tensor({1, u}, c))}, w);
    for (double v : s1.c.value().values()) CHECK(v == doctest::Approx(0.5 * c).epsilon(1e-15));
    for (double v : s1.h.value().values()) CHECK(v == doctest::Approx(0.5 * std::tanh(0.5 * c)).epsilon(1e-15));

    LstmWeights bad{Var(Tensor({d + 1, 4 * u})), w.recurrent, w.bias};
    CHECK_THROWS_AS(lstm_step(x, {Var(Tensor({1, u})), Var(Tensor({1, u}))}, bad), ShapeError);
}

TEST_CASE("attention pooling oracles") {
    const std::size_t T = 4, u = 2;
    std::vector<double> h{1, 2, 3, 4, 5, 6, 7, 8};
    auto H = constant({1, T, u}, h);
    auto W = Var(Tensor({u, u})), v = Var(Tensor({u}));

    auto flat = attention_pool(H, W, v, full_mask(1, T));
    CHECK(flat.pooled.value()[0] == doctest::Approx(4.0));
    CHECK(flat.pooled.value()[1] == doctest::Approx(5.0));

    Mask one{1, T, {0, 0, 1, 0}};
    auto single = attention_pool(H, W, v, one);
    CHECK(single.weights.value()[2] == 1.0);
    CHECK(single.pooled.value()[0] == 5.0);
    CHECK(single.pooled.value()[1] == 6.0);

    Rng rng(3);
    auto Wr = Var(uniform(Shape{u, u}, 1.0, rng)), vr = Var(uniform(Shape{u}, 1.0, rng));
    Mask partial{1, T, {1, 1, 0, 0}};
    auto p = attention_pool(H, Wr, vr, partial);
    CHECK(p.weights.value()[2] == 0.0);
    CHECK(p.weights.value()[3] == 0.0);
    CHECK(p.weights.value()[0] + p.weights.value()[1] == doctest::Approx(1.0).epsilon(1e-12));

    Mask none{1, T, {0, 0, 0, 0}};
    CHECK_THROWS_AS(attention_pool(H, W, v, none), Error);
}

TEST_CASE("softmax rows sum to one over kept positions") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t B = 3, T = 6;
        auto s = Var(uniform(Shape{B, T}, 20.0, rng));
        Mask m{B, T, std::vector<std::uint8_t>(B * T)};
        for (std::size_t b = 0; b < B; ++b) {
            m.keep[b * T + rng.below(T)] = 1;
            for (std::size_t t = 0; t < T; ++t) m.keep[b * T + t] |= rng.bernoulli(0.5);
        }
        auto a = masked_softmax(s, m);
        for (std::size_t b = 0; b < B; ++b) {
            double total = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                if (!m.at(b, t)) CHECK(a.value()[b * T + t] == 0.0);
                total += a.value()[b * T + t];
            }
            CHECK(std::abs(total - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("bce oracles") {
    std::vector<double> one{1.0}, zero{0.0};
    CHECK(bce_loss(constant({1}, {0.5}), one).value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(constant({1}, {1.0}), one).value()[0] < 1e-6);
    CHECK(bce_loss(constant({1}, {0.0}), zero).value()[0] < 1e-6);
    CHECK(bce_loss(constant({1}, {0.9}), one).value()[0] ==
          doctest::Approx(bce_loss(constant({1}, {0.1}), zero).value()[0]).epsilon(1e-12));
    // Clamping keeps the loss finite at the extremes.
    CHECK(std::isfinite(bce_loss(constant({1}, {0.0}), one).value()[0]));

    Parameter p(Tensor({2}, std::vector<double>{0.25, 0.6}));
    std::vector<double> y{1.0, 0.0};
    backward(bce_loss(p, y));
    CHECK(p.grad()[0] == doctest::Approx(-1.0 / 0.25 / 2.0));
    CHECK(p.grad()[1] == doctest::Approx(1.0 / 0.4 / 2.0));
}

TEST_CASE("dropout is identity at eval and unbiased in training") {
    Rng rng(17);
    auto x = Var(Tensor({1, 20000}, 1.0));
    CHECK(dropout(x, 0.2, rng, false).value() == x.value());
    auto y = dropout(x, 0.2, rng, true);
    const auto& v = y.value().values();
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    CHECK(std::abs(mean - 1.0) < 0.02);
    CHECK_THROWS_AS(dropout(x, 1.0, rng, true), ConfigError);
}

TEST_CASE("embedding lookup sends no gradient to PAD") {
    Parameter table(Tensor({3, 2}, std::vector<double>{0, 0, 1, 2, 3, 4}));
    std::vector<std::uint32_t> ids{1, 0, 2, 1};
    auto out = embedding_lookup(table, ids, 2, 2);
    CHECK(out.value()[2] == 0.0);
    backward(sum(out));
    CHECK(table.grad()[0] == 0.0);
    CHECK(table.grad()[2] == 2.0);
    CHECK(table.grad()[4] == 1.0);
    std::vector<std::uint32_t> bad{5};
    CHECK_THROWS_AS(embedding_lookup(table, bad, 1, 1), ShapeError);
}

TEST_CASE("adam first step moves by about lr") {
    Parameter p(Tensor({3}, std::vector<double>{1.0, -2.0, 0.5}));
    p.grad() = Tensor({3}, std::vector<double>{0.3, -4.0, 0.0});
    std::vector<Parameter> params{p};
    AdamState state;
    adam_step(params, state);
    CHECK(state.t == 1);
    const double step0 = 1.0 - p.value()[0];
    const double step1 = p.value()[1] - (-2.0);
    CHECK(step0 >= 0.0009);
    CHECK(step0 <= 0.001);
    CHECK(step1 >= 0.0009);
    CHECK(step1 <= 0.001);
    CHECK(p.value()[2] == 0.5);
    CHECK(state.m[0][2] == 0.0);
    CHECK(state.v[0][2] == 0.0);
    for (double g : p.grad().values()) CHECK(g == 0.0);
}

TEST_CASE("adam is deterministic") {
    auto run = [] {
        Rng rng(4);
        Parameter w(uniform(Shape{4, 2}, 1.0, rng));
        std::vector<Parameter> params{w};
        AdamState state;
        for (int step = 0; step < 10; ++step) {
            auto x = Var(uniform(Shape{3, 4}, 1.0, rng));
            backward(sum(tanh(matmul(x, w))));
            adam_step(params, state);
        }
        return w.value();
    };
    CHECK(run() == run());
}

TEST_CASE("no-grad guard suppresses recording") {
    Parameter w(Tensor({2}, 1.0));
    {
        NoGradGuard guard;
        CHECK_FALSE(grad_enabled());
        auto y = mul(w, w);
        CHECK_FALSE(y.requires_grad());
    }
    CHECK(grad_enabled());
    CHECK(mul(w, w).requires_grad());
}

TEST_CASE("gradient checker basics") {
    Parameter x(Tensor({2, 3}, 0.4));
    auto constant_fn = [&] { return Var(Tensor::scalar(3.0)); };
    std::vector<Parameter> params{x};
    auto r = check_gradients(constant_fn, params);
    CHECK(r.max_relative_error == 0.0);

    Rng rng(5);
    Parameter W(uniform(Shape{3, 2}, 1.0, rng)), b(uniform(Shape{2}, 1.0, rng));
    std::vector<Parameter> dense_params{x, W, b};
    auto dr = check_gradients([&] { return sum(dense(x, W, b)); }, dense_params);
    CHECK(dr.max_relative_error < 1e-6);
}

TEST_CASE("every layer passes randomized gradient checks") {
    for (const auto& c : testing::layer_grad_cases()) {
        for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            CAPTURE(c.name);
            CAPTURE(seed);
            CHECK(c.run(seed) < 1e-4);
        }
    }
}

TEST_CASE("weight init helpers are bounded and seeded") {
    Rng a(1), b(1);
    auto t = xavier_uniform({10, 20}, 10, 20, a);
    const double bound = std::sqrt(6.0 / 30.0);
    for (double v : t.values()) CHECK(std::abs(v) <= bound);
    CHECK(xavier_uniform({10, 20}, 10, 20, b) == t);
}
