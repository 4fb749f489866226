#include "tweetbag/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tweetbag/error.hpp"
#include "tweetbag/rng.hpp"

namespace tweetbag::nn {
namespace {

void require(bool ok, const char* op, const std::string& detail) {
    if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    require(a.shape() == b.shape(), op,
            "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

// Leading dimensions flattened: (rows, last).
std::pair<std::size_t, std::size_t> as_matrix(const Shape& s) {
    const std::size_t last = s.back();
    return {shape_size(s) / last, last};
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

template <class F, class DF>
Var unary(const Var& x, F f, DF df_from_output) {
    Tensor out(x.shape());
    const auto& xv = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
    return make_op(std::move(out), {x}, [df_from_output](Node& self) {
        Node& in = input(self, 0);
        auto& g = in.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i] * df_from_output(self.value[i], in.value[i]);
    });
}

double stable_sigmoid(double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace

std::size_t Mask::count(std::size_t b) const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < len; ++t) n += at(b, t) ? 1 : 0;
    return n;
}

std::size_t Mask::extent(std::size_t b) const {
    for (std::size_t t = len; t > 0; --t) {
        if (at(b, t - 1)) return t;
    }
    return 0;
}

Mask mask_from_ids(std::span<const std::uint32_t> ids, std::size_t batch, std::size_t len,
                   std::uint32_t pad) {
    if (ids.size() != batch * len) throw ShapeError("mask_from_ids: id count does not match batch x len");
    Mask m{batch, len, std::vector<std::uint8_t>(ids.size())};
    for (std::size_t i = 0; i < ids.size(); ++i) m.keep[i] = ids[i] != pad ? 1 : 0;
    return m;
}

// ---- elementwise -----------------------------------------------------------

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            Node& in = input(self, k);
            if (!in.requires_grad) continue;
            auto& g = in.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        Node& l = input(self, 0);
        Node& r = input(self, 1);
        if (l.requires_grad) {
            auto& g = l.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * r.value[i];
        }
        if (r.requires_grad) {
            auto& g = r.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * l.value[i];
        }
    });
}

Var sigmoid(const Var& x) {
    return unary(x, stable_sigmoid, [](double y, double) { return y * (1.0 - y); });
}

Var tanh(const Var& x) {
    return unary(x, [](double v) { return std::tanh(v); }, [](double y, double) { return 1.0 - y * y; });
}

Var relu(const Var& x) {
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                 [](double, double in) { return in > 0.0 ? 1.0 : 0.0; });
}

Var dropout(const Var& x, double p, Rng& rng, bool training) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must be in [0, 1)");
    if (!training || p == 0.0) return x;
    const double scale = 1.0 / (1.0 - p);
    std::vector<double> keep(x.value().size());
    for (auto& k : keep) k = rng.bernoulli(p) ? 0.0 : scale;
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * keep[i];
    return make_op(std::move(out), {x}, [keep = std::move(keep)](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * keep[i];
    });
}

// ---- structural ------------------------------------------------------------

Var reshape(const Var& x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    return make_op(std::move(out), {x}, [](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Var concat_last(std::span<const Var> parts) {
    require(!parts.empty(), "concat_last", "no inputs");
    Shape lead = parts[0].shape();
    lead.pop_back();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        Shape s = p.shape();
        const std::size_t w = s.back();
        s.pop_back();
        require(s == lead, "concat_last", "leading dimensions differ");
        widths.push_back(w);
        total += w;
    }
    Shape out_shape = lead;
    out_shape.push_back(total);
    Tensor out(out_shape);
    const std::size_t rows = shape_size(lead);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& v = parts[k].value();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total + offset);
        offset += widths[k];
    }
    return make_op(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                   [widths, rows, total](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                           Node& in = input(self, k);
                           if (in.requires_grad) {
                               auto& g = in.grad_buffer();
                               for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t j = 0; j < widths[k]; ++j)
                                       g[r * widths[k] + j] += self.grad[r * total + off + j];
                           }
                           off += widths[k];
                       }
                   });
}

Var slice_last(const Var& x, std::size_t start, std::size_t len) {
    const auto [rows, width] = as_matrix(x.shape());
    require(start + len <= width, "slice_last", "range exceeds last dimension");
    Shape out_shape = x.shape();
    out_shape.back() = len;
    Tensor out(out_shape);
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(x.value().data() + r * width + start, len, out.data() + r * len);
    return make_op(std::move(out), {x}, [rows = rows, width = width, start, len](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < len; ++j) g[r * width + start + j] += self.grad[r * len + j];
    });
}

Var select_time(const Var& x, std::size_t t) {
    require(x.value().rank() == 3, "select_time", "expects [B x T x D]");
    const std::size_t B = x.shape()[0], T = x.shape()[1], D = x.shape()[2];
    require(t < T, "select_time", "time index out of range");
    Tensor out(Shape{B, D});
    for (std::size_t b = 0; b < B; ++b)
        std::copy_n(x.value().data() + (b * T + t) * D, D, out.data() + b * D);
    return make_op(std::move(out), {x}, [B, T, D, t](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < D; ++j) g[(b * T + t) * D + j] += self.grad[b * D + j];
    });
}

Var stack_time(std::span<const Var> steps) {
    require(!steps.empty(), "stack_time", "no inputs");
    const Shape s = steps[0].shape();
    require(s.size() == 2, "stack_time", "expects [B x D] steps");
    const std::size_t B = s[0], D = s[1], T = steps.size();
    Tensor out(Shape{B, T, D});
    for (std::size_t t = 0; t < T; ++t) {
        require(steps[t].shape() == s, "stack_time", "step shapes differ");
        for (std::size_t b = 0; b < B; ++b)
            std::copy_n(steps[t].value().data() + b * D, D, out.data() + (b * T + t) * D);
    }
    return make_op(std::move(out), std::vector<Var>(steps.begin(), steps.end()), [B, T, D](Node& self) {
        for (std::size_t t = 0; t < T; ++t) {
            Node& in = input(self, t);
            if (!in.requires_grad) continue;
            auto& g = in.grad_buffer();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < D; ++j) g[b * D + j] += self.grad[(b * T + t) * D + j];
        }
    });
}

Var masked_update(const Var& next, const Var& prev, std::span<const std::uint8_t> keep) {
    require_same_shape(next, prev, "masked_update");
    const auto [rows, width] = as_matrix(next.shape());
    require(keep.size() == rows, "masked_update", "one flag per row required");
    Tensor out(next.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& src = keep[r] ? next.value() : prev.value();
        std::copy_n(src.data() + r * width, width, out.data() + r * width);
    }
    std::vector<std::uint8_t> flags(keep.begin(), keep.end());
    return make_op(std::move(out), {next, prev}, [flags = std::move(flags), width = width](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            Node& in = input(self, k);
            if (!in.requires_grad) continue;
            auto& g = in.grad_buffer();
            const bool want = (k == 0);
            for (std::size_t r = 0; r < flags.size(); ++r) {
                if ((flags[r] != 0) != want) continue;
                for (std::size_t j = 0; j < width; ++j) g[r * width + j] += self.grad[r * width + j];
            }
        }
    });
}

// ---- linear ----------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
    require(a.value().rank() == 2 && b.value().rank() == 2, "matmul", "expects 2-D operands");
    const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
    require(b.shape()[0] == k, "matmul",
            "inner dimensions differ: " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
    Tensor out(Shape{n, m});
    const double* A = a.value().data();
    const double* Bm = b.value().data();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            const double* brow = Bm + p * m;
            for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
        }
    }
    return make_op(std::move(out), {a, b}, [n, k, m](Node& self) {
        Node& l = input(self, 0);
        Node& r = input(self, 1);
        const double* G = self.grad.data();
        if (l.requires_grad) {
            double* gA = l.grad_buffer().data();
            const double* Bm = r.value.data();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) acc += G[i * m + j] * Bm[p * m + j];
                    gA[i * k + p] += acc;
                }
        }
        if (r.requires_grad) {
            double* gB = r.grad_buffer().data();
            const double* A = l.value.data();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = A[i * k + p];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < m; ++j) gB[p * m + j] += av * G[i * m + j];
                }
        }
    });
}

Var dense(const Var& x, const Var& W, const Var& b) {
    require(W.value().rank() == 2, "dense", "weight must be [in x out]");
    const std::size_t in = W.shape()[0], outw = W.shape()[1];
    require(!x.shape().empty() && x.shape().back() == in, "dense",
            "input " + shape_string(x.shape()) + " does not match weight " + shape_string(W.shape()));
    const bool has_bias = b.defined();
    if (has_bias) require(b.value().size() == outw, "dense", "bias size must equal output width");
    const std::size_t rows = x.value().size() / in;

    Shape out_shape = x.shape();
    out_shape.back() = outw;
    Tensor out(out_shape);
    const double* X = x.value().data();
    const double* Wd = W.value().data();
    for (std::size_t i = 0; i < rows; ++i) {
        double* row = out.data() + i * outw;
        if (has_bias) std::copy_n(b.value().data(), outw, row);
        for (std::size_t p = 0; p < in; ++p) {
            const double xv = X[i * in + p];
            if (xv == 0.0) continue;
            const double* wrow = Wd + p * outw;
            for (std::size_t j = 0; j < outw; ++j) row[j] += xv * wrow[j];
        }
    }
    std::vector<Var> inputs{x, W};
    if (has_bias) inputs.push_back(b);
    return make_op(std::move(out), std::move(inputs), [rows, in, outw, has_bias](Node& self) {
        Node& xn = input(self, 0);
        Node& wn = input(self, 1);
        const double* G = self.grad.data();
        if (xn.requires_grad) {
            double* gx = xn.grad_buffer().data();
            const double* Wd = wn.value.data();
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t p = 0; p < in; ++p) {
                    double acc = 0.0;
                    const double* wrow = Wd + p * outw;
                    const double* grow = G + i * outw;
                    for (std::size_t j = 0; j < outw; ++j) acc += grow[j] * wrow[j];
                    gx[i * in + p] += acc;
                }
        }
        if (wn.requires_grad) {
            double* gw = wn.grad_buffer().data();
            const double* X = xn.value.data();
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t p = 0; p < in; ++p) {
                    const double xv = X[i * in + p];
                    if (xv == 0.0) continue;
                    double* grow_w = gw + p * outw;
                    const double* grow = G + i * outw;
                    for (std::size_t j = 0; j < outw; ++j) grow_w[j] += xv * grow[j];
                }
        }
        if (has_bias) {
            Node& bn = input(self, 2);
            if (bn.requires_grad) {
                double* gb = bn.grad_buffer().data();
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < outw; ++j) gb[j] += G[i * outw + j];
            }
        }
    });
}

Var embedding_lookup(const Var& table, std::span<const std::uint32_t> ids, std::size_t batch,
                     std::size_t len) {
    require(table.value().rank() == 2, "embedding_lookup", "table must be [V x d]");
    require(ids.size() == batch * len, "embedding_lookup", "id count does not match batch x len");
    const std::size_t V = table.shape()[0], d = table.shape()[1];
    Tensor out(Shape{batch, len, d});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= V) {
            throw ShapeError("embedding_lookup: token id " + std::to_string(ids[i]) +
                             " out of range for vocabulary of " + std::to_string(V));
        }
        std::copy_n(table.value().data() + ids[i] * d, d, out.data() + i * d);
    }
    std::vector<std::uint32_t> idx(ids.begin(), ids.end());
    return make_op(std::move(out), {table}, [idx = std::move(idx), d](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] == 0) continue;
            for (std::size_t j = 0; j < d; ++j) g[idx[i] * d + j] += self.grad[i * d + j];
        }
    });
}

Var conv1d_maxpool(const Var& x, const Var& filters, const Var& bias,
                   std::span<const std::size_t> extents) {
    require(x.value().rank() == 3, "conv1d_maxpool", "input must be [B x T x d]");
    require(filters.value().rank() == 3, "conv1d_maxpool", "filters must be [k x d x F]");
    const std::size_t B = x.shape()[0], T = x.shape()[1], d = x.shape()[2];
    const std::size_t k = filters.shape()[0], F = filters.shape()[2];
    require(filters.shape()[1] == d, "conv1d_maxpool", "filter depth must equal embedding width");
    require(bias.value().size() == F, "conv1d_maxpool", "one bias per filter required");
    require(extents.empty() || extents.size() == B, "conv1d_maxpool", "one extent per row required");
    if (T < k) {
        throw ShapeError("conv1d_maxpool: sequence length " + std::to_string(T) +
                         " is shorter than filter width " + std::to_string(k));
    }
    const std::size_t all_windows = T - k + 1;

    Tensor out(Shape{B, F});
    // Winning window per (b, f); npos when the maximum activation is 0 from an
    // inactive ReLU.
    constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> argmax(B * F, npos);
    std::vector<double> pre(F);
    const double* X = x.value().data();
    const double* Wf = filters.value().data();
    const double* bv = bias.value().data();
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t windows = all_windows;
        if (!extents.empty()) {
            const std::size_t e = extents[b];
            windows = e >= k ? std::min(all_windows, e - k + 1) : 1;
        }
        double* best = out.data() + b * F;
        std::fill_n(best, F, 0.0);
        for (std::size_t t = 0; t < windows; ++t) {
            std::copy_n(bv, F, pre.begin());
            for (std::size_t j = 0; j < k; ++j) {
                const double* xrow = X + (b * T + t + j) * d;
                for (std::size_t c = 0; c < d; ++c) {
                    const double xv = xrow[c];
                    if (xv == 0.0) continue;
                    const double* wrow = Wf + (j * d + c) * F;
                    for (std::size_t f = 0; f < F; ++f) pre[f] += xv * wrow[f];
                }
            }
            for (std::size_t f = 0; f < F; ++f) {
                if (pre[f] > 0.0 && (argmax[b * F + f] == npos || pre[f] > best[f])) {
                    best[f] = pre[f];
                    argmax[b * F + f] = t;
                }
            }
        }
    }
    return make_op(std::move(out), {x, filters, bias},
                   [argmax = std::move(argmax), B, T, d, k, F](Node& self) {
                       Node& xn = input(self, 0);
                       Node& fn = input(self, 1);
                       Node& bn = input(self, 2);
                       double* gx = xn.requires_grad ? xn.grad_buffer().data() : nullptr;
                       double* gf = fn.requires_grad ? fn.grad_buffer().data() : nullptr;
                       double* gb = bn.requires_grad ? bn.grad_buffer().data() : nullptr;
                       const double* X = xn.value.data();
                       const double* Wf = fn.value.data();
                       for (std::size_t b = 0; b < B; ++b)
                           for (std::size_t f = 0; f < F; ++f) {
                               const std::size_t t = argmax[b * F + f];
                               if (t == npos) continue;
                               const double g = self.grad[b * F + f];
                               if (gb) gb[f] += g;
                               for (std::size_t j = 0; j < k; ++j)
                                   for (std::size_t c = 0; c < d; ++c) {
                                       const std::size_t xi = (b * T + t + j) * d + c;
                                       const std::size_t wi = (j * d + c) * F + f;
                                       if (gf) gf[wi] += g * X[xi];
                                       if (gx) gx[xi] += g * Wf[wi];
                                   }
                           }
                   });
}

// ---- recurrent -------------------------------------------------------------

LstmState lstm_step(const Var& x_t, const LstmState& prev, const LstmWeights& w) {
    require(prev.h.value().rank() == 2 && prev.h.shape() == prev.c.shape(), "lstm_step",
            "hidden and cell state must be matching [B x u]");
    const std::size_t u = prev.h.shape()[1];
    require(w.recurrent.value().rank() == 2 && w.recurrent.shape()[0] == u &&
                w.recurrent.shape()[1] == 4 * u,
            "lstm_step", "recurrent weight must be [u x 4u]");
    require(w.input.value().rank() == 2 && w.input.shape()[1] == 4 * u, "lstm_step",
            "input weight must be [d x 4u]");
    const Var z = add(dense(x_t, w.input, w.bias), matmul(prev.h, w.recurrent));
    const Var i = sigmoid(slice_last(z, 0, u));
    const Var f = sigmoid(slice_last(z, u, u));
    const Var g = tanh(slice_last(z, 2 * u, u));
    const Var o = sigmoid(slice_last(z, 3 * u, u));
    const Var c = add(mul(f, prev.c), mul(i, g));
    const Var h = mul(o, tanh(c));
    return {h, c};
}

// ---- attention -------------------------------------------------------------

Var masked_softmax(const Var& scores, const Mask& mask) {
    require(scores.value().rank() == 2, "masked_softmax", "scores must be [B x T]");
    const std::size_t B = scores.shape()[0], T = scores.shape()[1];
    require(mask.batch == B && mask.len == T, "masked_softmax", "mask shape differs from scores");
    Tensor out(Shape{B, T});
    for (std::size_t b = 0; b < B; ++b) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < T; ++t)
            if (mask.at(b, t)) mx = std::max(mx, scores.value()[b * T + t]);
        if (!std::isfinite(mx)) {
            throw Error("masked_softmax: row " + std::to_string(b) +
                        " has no unmasked position (empty sequence)");
        }
        double z = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            if (!mask.at(b, t)) continue;
            out[b * T + t] = std::exp(scores.value()[b * T + t] - mx);
            z += out[b * T + t];
        }
        for (std::size_t t = 0; t < T; ++t) out[b * T + t] /= z;
    }
    return make_op(std::move(out), {scores}, [B, T](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t b = 0; b < B; ++b) {
            double dot = 0.0;
            for (std::size_t t = 0; t < T; ++t) dot += self.grad[b * T + t] * self.value[b * T + t];
            for (std::size_t t = 0; t < T; ++t)
                g[b * T + t] += self.value[b * T + t] * (self.grad[b * T + t] - dot);
        }
    });
}

Var weighted_sum_time(const Var& H, const Var& alpha) {
    require(H.value().rank() == 3 && alpha.value().rank() == 2, "weighted_sum_time",
            "expects H [B x T x u] and alpha [B x T]");
    const std::size_t B = H.shape()[0], T = H.shape()[1], u = H.shape()[2];
    require(alpha.shape()[0] == B && alpha.shape()[1] == T, "weighted_sum_time", "alpha shape differs");
    Tensor out(Shape{B, u});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
            const double a = alpha.value()[b * T + t];
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < u; ++j) out[b * u + j] += a * H.value()[(b * T + t) * u + j];
        }
    return make_op(std::move(out), {H, alpha}, [B, T, u](Node& self) {
        Node& hn = input(self, 0);
        Node& an = input(self, 1);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const std::size_t base = (b * T + t) * u;
                if (hn.requires_grad) {
                    auto& gh = hn.grad_buffer();
                    const double a = an.value[b * T + t];
                    for (std::size_t j = 0; j < u; ++j) gh[base + j] += a * self.grad[b * u + j];
                }
                if (an.requires_grad) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < u; ++j) acc += self.grad[b * u + j] * hn.value[base + j];
                    an.grad_buffer()[b * T + t] += acc;
                }
            }
    });
}

AttentionPool attention_pool(const Var& H, const Var& W, const Var& v, const Mask& mask) {
    require(H.value().rank() == 3, "attention_pool", "H must be [B x T x u]");
    const std::size_t B = H.shape()[0], T = H.shape()[1];
    const std::size_t a = W.shape().at(1);
    require(v.value().size() == a, "attention_pool", "score vector must match attention width");
    const Var projected = tanh(dense(H, W, Var{}));
    const Var scores = reshape(dense(projected, reshape(v, Shape{a, 1}), Var{}), Shape{B, T});
    const Var alpha = masked_softmax(scores, mask);
    return {weighted_sum_time(H, alpha), alpha};
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
    const auto [rows, D] = as_matrix(x.shape());
    require(gain.value().size() == D && bias.value().size() == D, "layer_norm",
            "gain and bias must match the last dimension");
    Tensor out(x.shape());
    std::vector<double> xhat(x.value().size());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.value().data() + r * D;
        double mean = 0.0;
        for (std::size_t j = 0; j < D; ++j) mean += xr[j];
        mean /= static_cast<double>(D);
        double var = 0.0;
        for (std::size_t j = 0; j < D; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<double>(D);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < D; ++j) {
            xhat[r * D + j] = (xr[j] - mean) * inv_std[r];
            out[r * D + j] = gain.value()[j] * xhat[r * D + j] + bias.value()[j];
        }
    }
    return make_op(std::move(out), {x, gain, bias},
                   [xhat = std::move(xhat), inv_std = std::move(inv_std), rows = rows, D = D](Node& self) {
                       Node& xn = input(self, 0);
                       Node& gn = input(self, 1);
                       Node& bn = input(self, 2);
                       for (std::size_t r = 0; r < rows; ++r) {
                           const double* gy = self.grad.data() + r * D;
                           const double* xh = xhat.data() + r * D;
                           if (gn.requires_grad)
                               for (std::size_t j = 0; j < D; ++j) gn.grad_buffer()[j] += gy[j] * xh[j];
                           if (bn.requires_grad)
                               for (std::size_t j = 0; j < D; ++j) bn.grad_buffer()[j] += gy[j];
                           if (xn.requires_grad) {
                               double mean_d = 0.0, mean_dx = 0.0;
                               for (std::size_t j = 0; j < D; ++j) {
                                   const double dxh = gy[j] * gn.value[j];
                                   mean_d += dxh;
                                   mean_dx += dxh * xh[j];
                               }
                               mean_d /= static_cast<double>(D);
                               mean_dx /= static_cast<double>(D);
                               auto& gx = xn.grad_buffer();
                               for (std::size_t j = 0; j < D; ++j) {
                                   const double dxh = gy[j] * gn.value[j];
                                   gx[r * D + j] += inv_std[r] * (dxh - mean_d - xh[j] * mean_dx);
                               }
                           }
                       }
                   });
}

Var add_positional(const Var& x, const Var& table) {
    require(x.value().rank() == 3 && table.value().rank() == 2, "add_positional",
            "expects x [B x T x D] and table [L x D]");
    const std::size_t B = x.shape()[0], T = x.shape()[1], D = x.shape()[2];
    require(table.shape()[1] == D, "add_positional", "width mismatch");
    require(table.shape()[0] >= T, "add_positional", "sequence longer than the position table");
    Tensor out(x.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t j = 0; j < D; ++j)
                out[(b * T + t) * D + j] = x.value()[(b * T + t) * D + j] + table.value()[t * D + j];
    return make_op(std::move(out), {x, table}, [B, T, D](Node& self) {
        Node& xn = input(self, 0);
        Node& pn = input(self, 1);
        if (xn.requires_grad) {
            auto& g = xn.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (pn.requires_grad) {
            auto& g = pn.grad_buffer();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t t = 0; t < T; ++t)
                    for (std::size_t j = 0; j < D; ++j) g[t * D + j] += self.grad[(b * T + t) * D + j];
        }
    });
}

Var masked_mean_time(const Var& x, const Mask& mask) {
    require(x.value().rank() == 3, "masked_mean_time", "expects [B x T x D]");
    const std::size_t B = x.shape()[0], T = x.shape()[1], D = x.shape()[2];
    require(mask.batch == B && mask.len == T, "masked_mean_time", "mask shape differs");
    std::vector<double> weight(B * T, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t n = mask.count(b);
        if (n == 0) continue;
        for (std::size_t t = 0; t < T; ++t)
            if (mask.at(b, t)) weight[b * T + t] = 1.0 / static_cast<double>(n);
    }
    Tensor out(Shape{B, D});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
            const double w = weight[b * T + t];
            if (w == 0.0) continue;
            for (std::size_t j = 0; j < D; ++j) out[b * D + j] += w * x.value()[(b * T + t) * D + j];
        }
    return make_op(std::move(out), {x}, [weight = std::move(weight), B, T, D](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const double w = weight[b * T + t];
                if (w == 0.0) continue;
                for (std::size_t j = 0; j < D; ++j) g[(b * T + t) * D + j] += w * self.grad[b * D + j];
            }
    });
}

// ---- reductions and loss ---------------------------------------------------

Var sum(const Var& x) {
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    return make_op(Tensor::scalar(s), {x}, [](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
    });
}

Var dot_const(const Var& x, const Tensor& weights) {
    require(x.value().size() == weights.size(), "dot_const", "size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) s += x.value()[i] * weights[i];
    return make_op(Tensor::scalar(s), {x}, [weights](Node& self) {
        auto& g = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * weights[i];
    });
}

Var bce_loss(const Var& p, std::span<const double> y) {
    const std::size_t n = p.value().size();
    require(n == y.size() && n > 0, "bce_loss", "one label per probability required");
    std::vector<double> clamped(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        clamped[i] = std::clamp(p.value()[i], kBceClamp, 1.0 - kBceClamp);
        total -= y[i] * std::log(clamped[i]) + (1.0 - y[i]) * std::log(1.0 - clamped[i]);
    }
    std::vector<double> labels(y.begin(), y.end());
    return make_op(Tensor::scalar(total / static_cast<double>(n)), {p},
                   [clamped = std::move(clamped), labels = std::move(labels)](Node& self) {
                       auto& g = input(self, 0).grad_buffer();
                       const double scale = self.grad[0] / static_cast<double>(labels.size());
                       for (std::size_t i = 0; i < labels.size(); ++i) {
                           const double q = clamped[i];
                           g[i] += scale * (-(labels[i] / q) + (1.0 - labels[i]) / (1.0 - q));
                       }
                   });
}

}  // namespace tweetbag::nn
