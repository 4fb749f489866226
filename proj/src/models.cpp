#include "tweetbag/models.hpp"

#include <algorithm>
#include <map>

#include "tweetbag/error.hpp"
#include "tweetbag/nn/init.hpp"
#include "tweetbag/nn/ops.hpp"
#include "tweetbag/rng.hpp"

namespace tweetbag {

using nn::Parameter;
using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

constexpr double kForgetBias = 1.0;

std::string layer_prefix(std::size_t l) { return "tf" + std::to_string(l) + "."; }

std::string conv_prefix(std::size_t k) { return "conv" + std::to_string(k) + "."; }

bool is_bidirectional(ModelKind kind) {
    return kind == ModelKind::BiLstm || kind == ModelKind::AttBiLstm;
}

// Runs an LSTM over [B x T x d], holding the state fixed across masked
// positions. Returns the hidden state after each time step in time order; in
// reverse mode, entry t is the state after consuming positions T-1 .. t.
std::vector<Var> run_lstm(const Var& x, const nn::Mask& mask, const nn::LstmWeights& w,
                          std::size_t units, bool reverse) {
    const std::size_t B = x.shape()[0], T = x.shape()[1];
    nn::LstmState state{Var(Tensor(Shape{B, units})), Var(Tensor(Shape{B, units}))};
    std::vector<Var> hs(T);
    std::vector<std::uint8_t> keep(B);
    for (std::size_t step = 0; step < T; ++step) {
        const std::size_t t = reverse ? T - 1 - step : step;
        for (std::size_t b = 0; b < B; ++b) keep[b] = mask.at(b, t) ? 1 : 0;
        const auto next = nn::lstm_step(nn::select_time(x, t), state, w);
        state.h = nn::masked_update(next.h, state.h, keep);
        state.c = nn::masked_update(next.c, state.c, keep);
        hs[t] = state.h;
    }
    return hs;
}

class Forward {
public:
    Forward(const Model& model, const Batch& batch, bool training, Rng& rng)
        : model_(model), cfg_(model.config()), batch_(batch), training_(training), rng_(rng),
          mask_(nn::mask_from_ids(batch.ids, batch.size, batch.len)) {}

    Var logits() {
        if (batch_.size == 0 || batch_.len == 0) throw ShapeError("forward: empty batch");
        const Var x = nn::embedding_lookup(p("embedding"), batch_.ids, batch_.size, batch_.len);
        Var features;
        switch (cfg_.kind) {
            case ModelKind::Cnn: features = cnn(x); break;
            case ModelKind::Lstm: features = lstm(x); break;
            case ModelKind::BiLstm: features = bilstm(x); break;
            case ModelKind::AttBiLstm: features = att_bilstm(x); break;
            case ModelKind::TinyTransformer: features = transformer(x); break;
        }
        features = nn::dropout(features, cfg_.dropout, rng_, training_);
        const Var logit = nn::dense(features, p("head.W"), p("head.b"));
        return nn::reshape(logit, Shape{batch_.size});
    }

private:
    Var p(std::string_view name) const { return model_.parameter(name).var(); }

    nn::LstmWeights lstm_weights(const std::string& prefix) const {
        return {p(prefix + "input"), p(prefix + "recurrent"), p(prefix + "bias")};
    }

    Var cnn(const Var& x) {
        std::vector<std::size_t> extents(batch_.size);
        for (std::size_t b = 0; b < batch_.size; ++b) extents[b] = mask_.extent(b);
        std::vector<Var> pooled;
        for (auto k : cfg_.cnn_filter_sizes) {
            const auto prefix = conv_prefix(k);
            pooled.push_back(nn::conv1d_maxpool(x, p(prefix + "filters"), p(prefix + "bias"), extents));
        }
        return nn::concat_last(pooled);
    }

    Var lstm(const Var& x) {
        return run_lstm(x, mask_, lstm_weights("lstm_fwd."), cfg_.rnn_units, false).back();
    }

    Var bilstm(const Var& x) {
        const auto fwd = run_lstm(x, mask_, lstm_weights("lstm_fwd."), cfg_.rnn_units, false);
        const auto bwd = run_lstm(x, mask_, lstm_weights("lstm_bwd."), cfg_.rnn_units, true);
        const Var parts[] = {fwd.back(), bwd.front()};
        return nn::concat_last(parts);
    }

    Var att_bilstm(const Var& x) {
        const auto fwd = run_lstm(x, mask_, lstm_weights("lstm_fwd."), cfg_.rnn_units, false);
        const auto bwd = run_lstm(x, mask_, lstm_weights("lstm_bwd."), cfg_.rnn_units, true);
        std::vector<Var> steps;
        steps.reserve(fwd.size());
        for (std::size_t t = 0; t < fwd.size(); ++t) {
            const Var parts[] = {fwd[t], bwd[t]};
            steps.push_back(nn::concat_last(parts));
        }
        const Var H = nn::stack_time(steps);
        return nn::attention_pool(H, p("attention.W"), p("attention.v"), mask_).pooled;
    }

    Var transformer(const Var& x) {
        Var h = nn::dense(x, p("tf.input.W"), p("tf.input.b"));
        h = nn::add_positional(h, p("tf.position"));
        for (std::size_t l = 0; l < cfg_.tf_layers; ++l) {
            const auto pre = layer_prefix(l);
            const nn::SelfAttentionWeights w{p(pre + "wq"), p(pre + "bq"), p(pre + "wk"), p(pre + "bk"),
                                             p(pre + "wv"), p(pre + "bv"), p(pre + "wo"), p(pre + "bo")};
            const Var attended = nn::self_attention(h, w, cfg_.tf_heads, mask_);
            h = nn::layer_norm(nn::add(h, attended), p(pre + "ln1.gain"), p(pre + "ln1.bias"));
            const Var ff = nn::dense(nn::relu(nn::dense(h, p(pre + "ff1.W"), p(pre + "ff1.b"))),
                                     p(pre + "ff2.W"), p(pre + "ff2.b"));
            h = nn::layer_norm(nn::add(h, ff), p(pre + "ln2.gain"), p(pre + "ln2.bias"));
        }
        return nn::masked_mean_time(h, mask_);
    }

    const Model& model_;
    const ModelConfig& cfg_;
    const Batch& batch_;
    bool training_;
    Rng& rng_;
    nn::Mask mask_;
};

}  // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Cnn: return "cnn";
        case ModelKind::Lstm: return "lstm";
        case ModelKind::BiLstm: return "bilstm";
        case ModelKind::AttBiLstm: return "attbilstm";
        case ModelKind::TinyTransformer: return "transformer";
    }
    return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
    for (auto kind : kAllModelKinds) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
    if (embedding_dim == 0) fail("embedding_dim must be positive");
    if (max_len == 0) fail("max_len must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
    switch (kind) {
        case ModelKind::Cnn: {
            if (cnn_filter_sizes.empty()) fail("at least one CNN filter size is required");
            if (cnn_filters_per_size == 0) fail("cnn_filters_per_size must be positive");
            std::vector<std::size_t> sorted = cnn_filter_sizes;
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front() == 0) fail("CNN filter sizes must be positive");
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                fail("CNN filter sizes must be distinct");
            if (sorted.back() > max_len) {
                fail("filter size " + std::to_string(sorted.back()) + " exceeds max_len " +
                     std::to_string(max_len));
            }
            break;
        }
        case ModelKind::Lstm:
        case ModelKind::BiLstm:
        case ModelKind::AttBiLstm:
            if (rnn_units == 0) fail("rnn_units must be positive");
            break;
        case ModelKind::TinyTransformer:
            if (tf_layers == 0 || tf_model_dim == 0 || tf_ff_dim == 0 || tf_heads == 0)
                fail("transformer sizes must be positive");
            if (tf_model_dim % tf_heads != 0) fail("tf_model_dim must be divisible by tf_heads");
            break;
    }
}

std::size_t head_width(const ModelConfig& c) {
    switch (c.kind) {
        case ModelKind::Cnn: return c.cnn_filters_per_size * c.cnn_filter_sizes.size();
        case ModelKind::Lstm: return c.rnn_units;
        case ModelKind::BiLstm:
        case ModelKind::AttBiLstm: return 2 * c.rnn_units;
        case ModelKind::TinyTransformer: return c.tf_model_dim;
    }
    return 0;
}

std::size_t expected_parameter_count(const ModelConfig& c) {
    const std::size_t V = c.vocab_size, d = c.embedding_dim, u = c.rnn_units;
    const std::size_t lstm = 4 * u * (d + u) + 4 * u;
    std::size_t n = V * d + head_width(c) + 1;
    switch (c.kind) {
        case ModelKind::Cnn:
            for (auto k : c.cnn_filter_sizes) n += k * d * c.cnn_filters_per_size + c.cnn_filters_per_size;
            break;
        case ModelKind::Lstm: n += lstm; break;
        case ModelKind::BiLstm: n += 2 * lstm; break;
        case ModelKind::AttBiLstm: n += 2 * lstm + (2 * u) * (2 * u) + 2 * u; break;
        case ModelKind::TinyTransformer: {
            const std::size_t D = c.tf_model_dim, ff = c.tf_ff_dim;
            n += d * D + D + c.max_len * D;
            n += c.tf_layers * (4 * (D * D + D) + 4 * D + 2 * D * ff + ff + D);
            break;
        }
    }
    return n;
}

std::vector<NamedShape> parameter_layout(const ModelConfig& c) {
    std::vector<NamedShape> out;
    out.push_back({"embedding", {c.vocab_size, c.embedding_dim}});
    const std::size_t d = c.embedding_dim, u = c.rnn_units;
    switch (c.kind) {
        case ModelKind::Cnn:
            for (auto k : c.cnn_filter_sizes) {
                out.push_back({conv_prefix(k) + "filters", {k, d, c.cnn_filters_per_size}});
                out.push_back({conv_prefix(k) + "bias", {c.cnn_filters_per_size}});
            }
            break;
        case ModelKind::Lstm:
        case ModelKind::BiLstm:
        case ModelKind::AttBiLstm:
            for (const char* dir : {"lstm_fwd.", "lstm_bwd."}) {
                if (std::string_view(dir) == "lstm_bwd." && !is_bidirectional(c.kind)) break;
                out.push_back({std::string(dir) + "input", {d, 4 * u}});
                out.push_back({std::string(dir) + "recurrent", {u, 4 * u}});
                out.push_back({std::string(dir) + "bias", {4 * u}});
            }
            if (c.kind == ModelKind::AttBiLstm) {
                out.push_back({"attention.W", {2 * u, 2 * u}});
                out.push_back({"attention.v", {2 * u}});
            }
            break;
        case ModelKind::TinyTransformer: {
            const std::size_t D = c.tf_model_dim, ff = c.tf_ff_dim;
            out.push_back({"tf.input.W", {d, D}});
            out.push_back({"tf.input.b", {D}});
            out.push_back({"tf.position", {c.max_len, D}});
            for (std::size_t l = 0; l < c.tf_layers; ++l) {
                const auto pre = layer_prefix(l);
                for (const char* m : {"q", "k", "v", "o"}) {
                    out.push_back({pre + "w" + m, {D, D}});
                    out.push_back({pre + "b" + m, {D}});
                }
                out.push_back({pre + "ln1.gain", {D}});
                out.push_back({pre + "ln1.bias", {D}});
                out.push_back({pre + "ff1.W", {D, ff}});
                out.push_back({pre + "ff1.b", {ff}});
                out.push_back({pre + "ff2.W", {ff, D}});
                out.push_back({pre + "ff2.b", {D}});
                out.push_back({pre + "ln2.gain", {D}});
                out.push_back({pre + "ln2.bias", {D}});
            }
            break;
        }
    }
    out.push_back({"head.W", {head_width(c), 1}});
    out.push_back({"head.b", {1}});
    return out;
}

Batch make_batch(std::span<const std::vector<TokenId>> rows) {
    Batch batch;
    batch.size = rows.size();
    batch.len = rows.empty() ? 0 : rows.front().size();
    batch.ids.reserve(batch.size * batch.len);
    for (const auto& r : rows) {
        if (r.size() != batch.len) throw ShapeError("make_batch: rows differ in length");
        batch.ids.insert(batch.ids.end(), r.begin(), r.end());
    }
    return batch;
}

Model::Model(ModelConfig config, std::vector<std::string> names, std::vector<Parameter> params)
    : config_(std::move(config)), names_(std::move(names)), params_(std::move(params)) {
    if (names_.size() != params_.size()) throw Error("model: names and parameters differ in count");
    const auto layout = parameter_layout(config_);
    if (layout.size() != params_.size()) throw Error("model: parameter set does not match the configuration");
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (layout[i].name != names_[i] || layout[i].shape != params_[i].shape()) {
            throw Error("model: parameter '" + names_[i] + "' " + nn::shape_string(params_[i].shape()) +
                        " does not match expected '" + layout[i].name + "' " +
                        nn::shape_string(layout[i].shape));
        }
    }
    params_.front().set_trainable(!config_.freeze_embeddings);
}

std::vector<Parameter> Model::trainable_parameters() const {
    std::vector<Parameter> out;
    for (const auto& p : params_) {
        if (p.trainable()) out.push_back(p);
    }
    return out;
}

const Parameter& Model::parameter(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return params_[i];
    }
    throw Error("model has no parameter '" + std::string(name) + "'");
}

Parameter& Model::parameter(std::string_view name) {
    return const_cast<Parameter&>(std::as_const(*this).parameter(name));
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value().size();
    return n;
}

Model Model::clone() const {
    std::vector<Parameter> copies;
    copies.reserve(params_.size());
    for (const auto& p : params_) copies.push_back(p.clone());
    return Model(config_, names_, std::move(copies));
}

std::vector<Tensor> Model::snapshot() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value());
    return out;
}

void Model::restore(const std::vector<Tensor>& values) {
    if (values.size() != params_.size()) throw Error("model restore: wrong number of tensors");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].shape() != params_[i].shape()) throw ShapeError("model restore: shape mismatch");
        params_[i].value() = values[i];
    }
}

Model build_model(const ModelConfig& config, const EmbeddingMatrix& embeddings, std::uint64_t seed) {
    ModelConfig cfg = config;
    if (embeddings.dim != cfg.embedding_dim) {
        throw ConfigError("embedding matrix has dimension " + std::to_string(embeddings.dim) +
                          " but the model expects " + std::to_string(cfg.embedding_dim));
    }
    if (cfg.vocab_size == 0) cfg.vocab_size = embeddings.rows;
    if (cfg.vocab_size != embeddings.rows) {
        throw ConfigError("embedding matrix has " + std::to_string(embeddings.rows) +
                          " rows but vocab_size is " + std::to_string(cfg.vocab_size));
    }
    cfg.validate();

    Rng rng(seed);
    std::vector<std::string> names;
    std::vector<Parameter> params;
    const std::size_t u = cfg.rnn_units;
    for (auto& [name, shape] : parameter_layout(cfg)) {
        Tensor value;
        auto ends_with = [&](std::string_view s) { return std::string_view(name).ends_with(s); };
        if (name == "embedding") {
            value = Tensor(shape, embeddings.values);
        } else if (name.starts_with("conv") && ends_with("filters")) {
            value = nn::xavier_uniform(shape, shape[0] * shape[1], shape[0] * shape[2], rng);
        } else if (ends_with("recurrent")) {
            value = nn::scaled_uniform(shape, u, rng);
        } else if (name.starts_with("lstm") && ends_with("bias")) {
            value = Tensor(shape);
            for (std::size_t j = u; j < 2 * u; ++j) value[j] = kForgetBias;
        } else if (name == "attention.v") {
            value = nn::xavier_uniform(shape, shape[0], 1, rng);
        } else if (name == "tf.position") {
            value = nn::uniform(shape, kOovInitRange, rng);
        } else if (ends_with("gain")) {
            value = Tensor(shape, 1.0);
        } else if (shape.size() == 2) {
            value = nn::xavier_uniform(shape, shape[0], shape[1], rng);
        } else {
            value = Tensor(shape);
        }
        names.push_back(name);
        params.emplace_back(std::move(value));
    }
    return Model(std::move(cfg), std::move(names), std::move(params));
}

Var forward_logits(const Model& model, const Batch& batch, bool training, Rng& rng) {
    return Forward(model, batch, training, rng).logits();
}

std::vector<double> predict_proba(const Model& model, const Batch& batch) {
    nn::NoGradGuard no_grad;
    Rng unused(0);
    const Var p = nn::sigmoid(forward_logits(model, batch, false, unused));
    return {p.value().values().begin(), p.value().values().end()};
}

std::vector<double> predict_proba(const Model& model, std::span<const std::vector<TokenId>> rows,
                                  std::size_t chunk) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t start = 0; start < rows.size(); start += chunk) {
        const auto part = rows.subspan(start, std::min(chunk, rows.size() - start));
        const auto probs = predict_proba(model, make_batch(part));
        out.insert(out.end(), probs.begin(), probs.end());
    }
    return out;
}

Label classify(double p, double threshold) {
    return p >= threshold ? Label::Informative : Label::Uninformative;
}

}  // namespace tweetbag
