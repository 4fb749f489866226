#include "tweetbag/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "tweetbag/error.hpp"
#include "tweetbag/keyvalue.hpp"
#include "tweetbag/nn/ops.hpp"
#include "tweetbag/nn/optim.hpp"
#include "tweetbag/rng.hpp"

namespace tweetbag {

namespace {

enum SeedStream : std::uint64_t { kEmbeddingStream = 1, kInitStream = 2, kTrainStream = 3 };

std::vector<Label> require_labels(const EncodedSet& set, const char* what) {
    if (set.rows.empty()) throw Error(std::string(what) + " set is empty");
    if (set.labels.size() != set.rows.size()) throw Error(std::string(what) + " set is missing labels");
    return set.labels;
}

}  // namespace

TrainConfig TrainConfig::defaults_for(ModelKind kind) {
    TrainConfig c;
    if (kind == ModelKind::TinyTransformer) {
        c.epochs = 10;
        c.lr = 4e-5;
    }
    return c;
}

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("epochs must be at least 1");
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (patience == 0) throw ConfigError("patience must be at least 1");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(adam_epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

bool EarlyStopping::observe(double f1) {
    ++epoch_;
    if (f1 > best_f1_) {
        best_f1_ = f1;
        best_epoch_ = epoch_;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

EncodedSet encode_set(std::span<const Tweet> tweets, const Vocabulary& vocab, std::size_t max_len) {
    EncodedSet set;
    set.rows.reserve(tweets.size());
    bool labeled = true;
    for (const auto& t : tweets) {
        set.rows.push_back(encode(t.text, vocab, max_len));
        labeled = labeled && t.label.has_value();
    }
    if (labeled) {
        for (const auto& t : tweets) set.labels.push_back(*t.label);
    }
    return set;
}

std::vector<Label> predict_labels(const Model& model, std::span<const std::vector<TokenId>> rows,
                                  double threshold) {
    const auto probs = predict_proba(model, rows);
    std::vector<Label> out;
    out.reserve(probs.size());
    for (double p : probs) out.push_back(classify(p, threshold));
    return out;
}

TrainHistory train(Model& model, const EncodedSet& train_set, const EncodedSet& val_set,
                   const TrainConfig& config) {
    config.validate();
    const auto train_labels = require_labels(train_set, "training");
    const auto val_labels = require_labels(val_set, "validation");

    Rng rng(config.seed);
    auto params = model.trainable_parameters();
    nn::AdamState adam;
    adam.lr = config.lr;
    adam.epsilon = config.adam_epsilon;

    std::vector<std::size_t> order(train_set.rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainHistory history;
    EarlyStopping stopper(config.patience);
    std::vector<nn::Tensor> best_weights = model.snapshot();
    std::vector<std::vector<TokenId>> rows;
    std::vector<double> targets;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (config.shuffle_each_epoch) rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            rows.clear();
            targets.clear();
            for (std::size_t i = start; i < end; ++i) {
                rows.push_back(train_set.rows[order[i]]);
                targets.push_back(train_labels[order[i]] == Label::Informative ? 1.0 : 0.0);
            }
            const auto batch = make_batch(rows);
            const auto probs = nn::sigmoid(forward_logits(model, batch, true, rng));
            const auto loss = nn::bce_loss(probs, targets);
            const double value = loss.value()[0];
            if (!std::isfinite(value)) throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
            nn::backward(loss);
            nn::adam_step(params, adam);
            loss_sum += value;
            ++batches;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(batches);
        record.val = evaluate(predict_labels(model, val_set.rows), val_labels);
        history.epochs.push_back(record);

        if (stopper.observe(record.val.f1)) best_weights = model.snapshot();
        if (stopper.should_stop() && epoch < config.epochs) {
            history.stopped_early = true;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch();
    model.restore(best_weights);
    return history;
}

FittedModel fit(std::span<const Tweet> train_tweets, std::span<const Tweet> val_tweets,
                const FitOptions& options, std::uint64_t seed) {
    if (train_tweets.empty()) throw Error("training split is empty");
    Vocabulary vocab = build_vocab(train_tweets, options.min_freq);
    const std::size_t dim = options.model.embedding_dim;
    const auto emb_seed = derive_seed(seed, kEmbeddingStream);
    const EmbeddingMatrix embeddings = options.vectors ? load_vectors(*options.vectors, vocab, dim, emb_seed)
                                                       : random_embeddings(vocab, dim, emb_seed);
    ModelConfig mcfg = options.model;
    mcfg.vocab_size = 0;
    Model model = build_model(mcfg, embeddings, derive_seed(seed, kInitStream));

    TrainConfig tcfg = options.train;
    tcfg.seed = derive_seed(seed, kTrainStream);
    const std::size_t max_len = model.config().max_len;
    const auto history = train(model, encode_set(train_tweets, vocab, max_len),
                               encode_set(val_tweets, vocab, max_len), tcfg);
    return {std::move(model), std::move(vocab), history};
}

std::vector<Label> predict_labels(const Model& model, const Vocabulary& vocab,
                                  std::span<const Tweet> tweets) {
    if (vocab.size() != model.config().vocab_size)
        throw Error("vocabulary does not belong to this model");
    return predict_labels(model, encode_set(tweets, vocab, model.config().max_len).rows);
}

std::string format_history_log(const TrainHistory& history) {
    std::string out = "epoch\ttrain_loss\tprecision\trecall\tf1\taccuracy\n";
    for (const auto& e : history.epochs) {
        out += std::to_string(e.epoch) + "\t" + format_double(e.train_loss) + "\t" +
               format_double(e.val.precision) + "\t" + format_double(e.val.recall) + "\t" +
               format_double(e.val.f1) + "\t" + format_double(e.val.accuracy) + "\n";
    }
    return out;
}

void write_history_log(const std::filesystem::path& path, const TrainHistory& history) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << format_history_log(history);
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace tweetbag
