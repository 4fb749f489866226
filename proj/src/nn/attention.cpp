#include <cmath>
#include <limits>

#include "tweetbag/error.hpp"
#include "tweetbag/nn/ops.hpp"

namespace tweetbag::nn {

Var scaled_dot_attention(const Var& Q, const Var& K, const Var& V, std::size_t heads,
                         const Mask& mask) {
    if (Q.value().rank() != 3 || Q.shape() != K.shape() || Q.shape() != V.shape())
        throw ShapeError("scaled_dot_attention: Q, K, V must share one [B x T x D] shape");
    const std::size_t B = Q.shape()[0], T = Q.shape()[1], D = Q.shape()[2];
    if (heads == 0 || D % heads != 0)
        throw ShapeError("scaled_dot_attention: width " + std::to_string(D) + " not divisible by " +
                         std::to_string(heads) + " heads");
    if (mask.batch != B || mask.len != T) throw ShapeError("scaled_dot_attention: mask shape differs");
    const std::size_t dh = D / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // probs[((b * heads + h) * T + i) * T + j]: weight of key j for query i.
    std::vector<double> probs(B * heads * T * T, 0.0);
    Tensor out(Q.shape());
    const double* q = Q.value().data();
    const double* k = K.value().data();
    const double* v = V.value().data();
    std::vector<double> row(T);
    for (std::size_t b = 0; b < B; ++b) {
        if (mask.count(b) == 0) continue;
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < T; ++i) {
                const double* qi = q + (b * T + i) * D + h * dh;
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < T; ++j) {
                    if (!mask.at(b, j)) continue;
                    const double* kj = k + (b * T + j) * D + h * dh;
                    double s = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
                    row[j] = s * scale;
                    mx = std::max(mx, row[j]);
                }
                double* p = probs.data() + ((b * heads + h) * T + i) * T;
                double z = 0.0;
                for (std::size_t j = 0; j < T; ++j) {
                    if (!mask.at(b, j)) continue;
                    p[j] = std::exp(row[j] - mx);
                    z += p[j];
                }
                double* o = out.data() + (b * T + i) * D + h * dh;
                for (std::size_t j = 0; j < T; ++j) {
                    if (p[j] == 0.0) continue;
                    p[j] /= z;
                    const double* vj = v + (b * T + j) * D + h * dh;
                    for (std::size_t c = 0; c < dh; ++c) o[c] += p[j] * vj[c];
                }
            }
        }
    }

    return make_op(std::move(out), {Q, K, V},
                   [probs = std::move(probs), B, T, D, heads, dh, scale](Node& self) {
                       Node& qn = *self.inputs[0];
                       Node& kn = *self.inputs[1];
                       Node& vn = *self.inputs[2];
                       const double* q = qn.value.data();
                       const double* k = kn.value.data();
                       const double* v = vn.value.data();
                       double* gq = qn.requires_grad ? qn.grad_buffer().data() : nullptr;
                       double* gk = kn.requires_grad ? kn.grad_buffer().data() : nullptr;
                       double* gv = vn.requires_grad ? vn.grad_buffer().data() : nullptr;
                       std::vector<double> dp(T);
                       for (std::size_t b = 0; b < B; ++b)
                           for (std::size_t h = 0; h < heads; ++h)
                               for (std::size_t i = 0; i < T; ++i) {
                                   const double* p = probs.data() + ((b * heads + h) * T + i) * T;
                                   const double* go = self.grad.data() + (b * T + i) * D + h * dh;
                                   double dot = 0.0;
                                   for (std::size_t j = 0; j < T; ++j) {
                                       if (p[j] == 0.0) {
                                           dp[j] = 0.0;
                                           continue;
                                       }
                                       const double* vj = v + (b * T + j) * D + h * dh;
                                       double acc = 0.0;
                                       for (std::size_t c = 0; c < dh; ++c) acc += go[c] * vj[c];
                                       dp[j] = acc;
                                       dot += acc * p[j];
                                       if (gv) {
                                           double* gvj = gv + (b * T + j) * D + h * dh;
                                           for (std::size_t c = 0; c < dh; ++c) gvj[c] += p[j] * go[c];
                                       }
                                   }
                                   const double* qi = q + (b * T + i) * D + h * dh;
                                   for (std::size_t j = 0; j < T; ++j) {
                                       if (p[j] == 0.0) continue;
                                       const double ds = p[j] * (dp[j] - dot) * scale;
                                       const double* kj = k + (b * T + j) * D + h * dh;
                                       if (gq) {
                                           double* gqi = gq + (b * T + i) * D + h * dh;
                                           for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                                       }
                                       if (gk) {
                                           double* gkj = gk + (b * T + j) * D + h * dh;
                                           for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                                       }
                                   }
                               }
                   });
}

Var self_attention(const Var& x, const SelfAttentionWeights& w, std::size_t heads, const Mask& mask) {
    const Var q = dense(x, w.wq, w.bq);
    const Var k = dense(x, w.wk, w.bk);
    const Var v = dense(x, w.wv, w.bv);
    return dense(scaled_dot_attention(q, k, v, heads, mask), w.wo, w.bo);
}

}  // namespace tweetbag::nn
