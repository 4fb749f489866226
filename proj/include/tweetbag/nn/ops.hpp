#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tweetbag/nn/autograd.hpp"

namespace tweetbag {
class Rng;
}

namespace tweetbag::nn {

// Per-position keep flags for a [batch x len] block of token ids; true on
// real tokens, false on padding.
struct Mask {
    std::size_t batch = 0;
    std::size_t len = 0;
    std::vector<std::uint8_t> keep;

    bool at(std::size_t b, std::size_t t) const { return keep[b * len + t] != 0; }
    std::size_t count(std::size_t b) const;
    // One past the last kept position of row b (0 when nothing is kept).
    std::size_t extent(std::size_t b) const;
};

Mask mask_from_ids(std::span<const std::uint32_t> ids, std::size_t batch, std::size_t len,
                   std::uint32_t pad = 0);

// ---- elementwise -----------------------------------------------------------

Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var relu(const Var& x);

// Inverted dropout: at train time zeroes each entry with probability p and
// scales survivors by 1/(1-p); identity when !training or p == 0.
Var dropout(const Var& x, double p, Rng& rng, bool training);

// ---- structural ------------------------------------------------------------

Var reshape(const Var& x, Shape shape);
Var concat_last(std::span<const Var> parts);
Var slice_last(const Var& x, std::size_t start, std::size_t len);
// [B x T x D] -> [B x D] at time t.
Var select_time(const Var& x, std::size_t t);
// T tensors of [B x D] -> [B x T x D].
Var stack_time(std::span<const Var> steps);
// Row b of the result is next[b] where keep[b] is set, prev[b] otherwise.
Var masked_update(const Var& next, const Var& prev, std::span<const std::uint8_t> keep);

// ---- linear ----------------------------------------------------------------

// [n x k] * [k x m].
Var matmul(const Var& a, const Var& b);
// x [... x in] * W [in x out] + b [out]. `b` may be undefined (no bias).
Var dense(const Var& x, const Var& W, const Var& b);

/// Row lookup into `table` [V x d] for a [batch x len] block of ids, giving
/// [batch x len x d]. Gradients scatter-add back into the table, except for
/// id 0 (PAD), whose row never receives gradient.
Var embedding_lookup(const Var& table, std::span<const std::uint32_t> ids, std::size_t batch,
                     std::size_t len);

/// Valid 1-D convolution over time followed by ReLU and max-over-time.
/// x [B x T x d], filters [k x d x F], bias [F] -> [B x F].
///
/// When `extents` is given, row b only considers windows that lie inside its
/// first extents[b] positions, and at least the first window; this makes the
/// result independent of trailing padding.
Var conv1d_maxpool(const Var& x, const Var& filters, const Var& bias,
                   std::span<const std::size_t> extents = {});

// ---- recurrent -------------------------------------------------------------

// Gate order in the packed 4u columns: input, forget, cell candidate, output.
struct LstmWeights {
    Var input;      // [d x 4u]
    Var recurrent;  // [u x 4u]
    Var bias;       // [4u]
};

struct LstmState {
    Var h;
    Var c;
};

// i,f,o = sigmoid, g = tanh; c' = f*c + i*g; h' = o*tanh(c').
LstmState lstm_step(const Var& x_t, const LstmState& prev, const LstmWeights& w);

// ---- attention -------------------------------------------------------------

// Softmax over kept positions of each row of [B x T]; masked entries are 0.
// A row with no kept position is an error.
Var masked_softmax(const Var& scores, const Mask& mask);

// sum_t alpha[b,t] * H[b,t,:] for H [B x T x u], alpha [B x T].
Var weighted_sum_time(const Var& H, const Var& alpha);

struct AttentionPool {
    Var pooled;   // [B x u]
    Var weights;  // [B x T]
};

/// Additive attention pooling: s_t = v . tanh(W h_t), alpha = masked softmax
/// of s, output sum_t alpha_t h_t. W [u x a], v [a].
AttentionPool attention_pool(const Var& H, const Var& W, const Var& v, const Mask& mask);

/// Scaled dot-product attention with `heads` heads over Q, K, V [B x T x D].
/// Keys at masked positions get zero weight; a query whose row has no kept
/// key attends to nothing and yields zeros.
Var scaled_dot_attention(const Var& Q, const Var& K, const Var& V, std::size_t heads,
                         const Mask& mask);

struct SelfAttentionWeights {
    Var wq, bq, wk, bk, wv, bv, wo, bo;
};

Var self_attention(const Var& x, const SelfAttentionWeights& w, std::size_t heads, const Mask& mask);

// Normalizes over the last axis, then scales by gain and shifts by bias.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// x [B x T x D] + table[0:T] where table is [L x D], L >= T.
Var add_positional(const Var& x, const Var& table);

// Mean over kept time steps; zeros for a row with none.
Var masked_mean_time(const Var& x, const Mask& mask);

// ---- reductions and loss ---------------------------------------------------

Var sum(const Var& x);
// sum(x * weights) for a constant tensor of the same size.
Var dot_const(const Var& x, const Tensor& weights);

inline constexpr double kBceClamp = 1e-7;

/// Mean binary cross-entropy of probabilities p (any shape with |y| entries).
/// p is clamped to [1e-7, 1 - 1e-7]; the backward pass evaluates the
/// derivative at the clamped value and passes it through the clamp.
Var bce_loss(const Var& p, std::span<const double> y);

}  // namespace tweetbag::nn
