#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tweetbag/corpus.hpp"
#include "tweetbag/metrics.hpp"
#include "tweetbag/models.hpp"
#include "tweetbag/vocab.hpp"

namespace tweetbag {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 8;
    double lr = 1e-3;
    double adam_epsilon = 1e-8;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
    bool shuffle_each_epoch = true;

    // 20 epochs at 1e-3 for CNN/RNN models; 10 epochs at 4e-5 for the
    // transformer.
    static TrainConfig defaults_for(ModelKind kind);

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    Metrics val;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 1-based; 0 before any epoch
    bool stopped_early = false;

    const EpochRecord& best() const { return epochs.at(best_epoch - 1); }
};

/// Patience-based early stopping on validation F1. An epoch counts as an
/// improvement only when its F1 is strictly greater than the best so far, so
/// ties keep the earliest epoch.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    // Returns true when this epoch is the new best.
    bool observe(double f1);
    bool should_stop() const { return stale_ >= patience_; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best_f1() const { return best_f1_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t stale_ = 0;
    double best_f1_ = -1.0;
};

// Encoded rows plus labels (labels may be empty for unlabeled data).
struct EncodedSet {
    std::vector<std::vector<TokenId>> rows;
    std::vector<Label> labels;
};

EncodedSet encode_set(std::span<const Tweet> tweets, const Vocabulary& vocab, std::size_t max_len);

/// Minibatch Adam on mean BCE. Validation metrics are computed after every
/// epoch; training stops once F1 has not improved for `patience` epochs or
/// the epoch budget runs out. `model` is left at the best epoch's weights.
TrainHistory train(Model& model, const EncodedSet& train_set, const EncodedSet& val_set,
                   const TrainConfig& config);

std::vector<Label> predict_labels(const Model& model, std::span<const std::vector<TokenId>> rows,
                                  double threshold = kDefaultThreshold);

// A model trained end to end from raw (already cleaned) splits.
struct FittedModel {
    Model model;
    Vocabulary vocab;
    TrainHistory history;
};

struct FitOptions {
    ModelConfig model;
    TrainConfig train;
    std::size_t min_freq = 1;
    std::optional<std::filesystem::path> vectors;  // .vec file; random rows when absent
};

/// Vocabulary from `train` only, embeddings, fresh model, training. Every
/// random stream derives from `seed` (embedding init, weight init, epoch
/// order and dropout), overriding options.train.seed.
FittedModel fit(std::span<const Tweet> train_tweets, std::span<const Tweet> val_tweets,
                const FitOptions& options, std::uint64_t seed);

std::vector<Label> predict_labels(const Model& model, const Vocabulary& vocab,
                                  std::span<const Tweet> tweets);

// "epoch\ttrain_loss\tprecision\trecall\tf1\taccuracy" then one row per epoch.
std::string format_history_log(const TrainHistory& history);
void write_history_log(const std::filesystem::path& path, const TrainHistory& history);

}  // namespace tweetbag
