#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tweetbag/corpus.hpp"
#include "tweetbag/nn/autograd.hpp"
#include "tweetbag/vocab.hpp"

namespace tweetbag {

class Rng;

enum class ModelKind { Cnn, Lstm, BiLstm, AttBiLstm, TinyTransformer };

// "cnn", "lstm", "bilstm", "attbilstm", "transformer".
std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);
inline constexpr ModelKind kAllModelKinds[] = {ModelKind::Cnn, ModelKind::Lstm, ModelKind::BiLstm,
                                               ModelKind::AttBiLstm, ModelKind::TinyTransformer};

struct ModelConfig {
    ModelKind kind = ModelKind::AttBiLstm;
    std::size_t embedding_dim = 300;
    std::size_t vocab_size = 0;  // 0: taken from the embedding matrix at build time
    std::size_t max_len = 128;
    double dropout = 0.2;
    std::size_t rnn_units = 150;
    std::vector<std::size_t> cnn_filter_sizes{3, 4, 5};
    std::size_t cnn_filters_per_size = 100;
    std::size_t tf_layers = 2;
    std::size_t tf_heads = 4;
    std::size_t tf_model_dim = 128;
    std::size_t tf_ff_dim = 256;
    bool freeze_embeddings = false;

    // Throws ConfigError on an inconsistent configuration.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Width of the feature vector fed to the sigmoid head.
std::size_t head_width(const ModelConfig& config);

/// Closed-form trainable-parameter count (embedding included), with
/// V = vocab, d = embedding, u = units, F = filters per size, D = model width:
///   CNN         Vd + sum_k (k d F + F) + (F n_sizes + 1)
///   LSTM        Vd + 4u(d+u) + 4u + (u + 1)
///   BiLSTM      Vd + 2(4u(d+u) + 4u) + (2u + 1)
///   AttBiLSTM   BiLSTM + (2u)^2 + 2u
///   Transformer Vd + dD + D + max_len D
///               + layers (4(D^2 + D) + 4D + 2 D ff + ff + D) + (D + 1)
std::size_t expected_parameter_count(const ModelConfig& config);

struct NamedShape {
    std::string name;
    nn::Shape shape;
};

// Names and shapes of every parameter, in construction order.
std::vector<NamedShape> parameter_layout(const ModelConfig& config);

// A right-padded [size x len] block of token ids.
struct Batch {
    std::size_t size = 0;
    std::size_t len = 0;
    std::vector<TokenId> ids;
};

// Rows must share one length.
Batch make_batch(std::span<const std::vector<TokenId>> rows);

class Model {
public:
    Model(ModelConfig config, std::vector<std::string> names, std::vector<nn::Parameter> params);

    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    const ModelConfig& config() const { return config_; }

    std::span<nn::Parameter> parameters() { return params_; }
    std::span<const nn::Parameter> parameters() const { return params_; }
    const std::vector<std::string>& parameter_names() const { return names_; }

    // Excludes the embedding table when embeddings are frozen.
    std::vector<nn::Parameter> trainable_parameters() const;

    const nn::Parameter& parameter(std::string_view name) const;
    nn::Parameter& parameter(std::string_view name);

    std::size_t parameter_count() const;

    Model clone() const;
    std::vector<nn::Tensor> snapshot() const;
    void restore(const std::vector<nn::Tensor>& values);

private:
    ModelConfig config_;
    std::vector<std::string> names_;
    std::vector<nn::Parameter> params_;
};

/// Builds one of the five classifiers over `embeddings`, all ending in a
/// single logit and a sigmoid:
///   CNN          conv1d+ReLU+max-over-time per filter size, concatenated
///   LSTM         last unmasked hidden state of a forward LSTM
///   BiLSTM       [forward last ; backward first] hidden states
///   AttBiLSTM    additive attention pooling over the BiLSTM states
///   Transformer  projected embeddings + learned positions, post-norm
///                encoder layers with PAD-masked attention, masked mean pool
/// Dropout sits between the pooled features and the head. Initialization is
/// seeded: Xavier-uniform for dense, conv and attention weights,
/// U[-1/sqrt(u), 1/sqrt(u)] for recurrent weights, zero biases except the
/// LSTM forget gate (1).
Model build_model(const ModelConfig& config, const EmbeddingMatrix& embeddings, std::uint64_t seed);

// Logits [batch]. Dropout is active only when `training` is set.
nn::Var forward_logits(const Model& model, const Batch& batch, bool training, Rng& rng);

// Eval-mode probabilities, one per row.
std::vector<double> predict_proba(const Model& model, const Batch& batch);

// Same, over many encoded rows, `chunk` rows at a time.
std::vector<double> predict_proba(const Model& model, std::span<const std::vector<TokenId>> rows,
                                  std::size_t chunk = 64);

inline constexpr double kDefaultThreshold = 0.5;

// Informative iff p >= threshold.
Label classify(double p, double threshold = kDefaultThreshold);

}  // namespace tweetbag
