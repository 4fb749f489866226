// tweetbag command-line interface: preprocess, train, predict, evaluate, bag.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "tweetbag/checkpoint.hpp"
#include "tweetbag/corpus.hpp"
#include "tweetbag/ensemble.hpp"
#include "tweetbag/error.hpp"
#include "tweetbag/keyvalue.hpp"
#include "tweetbag/metrics.hpp"
#include "tweetbag/preprocess.hpp"
#include "tweetbag/train.hpp"

namespace fs = std::filesystem;
using namespace tweetbag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr const char* kDataDirEnv = "TWEETBAG_DATA_DIR";

// Relative inputs missing from the working directory are looked up under
// $TWEETBAG_DATA_DIR.
fs::path resolve_input(const fs::path& p) {
    if (p.is_absolute() || fs::exists(p)) return p;
    if (const char* dir = std::getenv(kDataDirEnv)) {
        fs::path candidate = fs::path(dir) / p;
        if (fs::exists(candidate)) return candidate;
    }
    return p;
}

// A file is labeled when it has the three-column header or its first data
// line has three fields.
bool looks_labeled(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (line.empty()) continue;
        if (line == "Id\tText\tLabel") return true;
        if (line == "Id\tText") return false;
        return std::count(line.begin(), line.end(), '\t') == 2;
    }
    return false;
}

std::vector<Tweet> load_any(const fs::path& path, bool& labeled) {
    const auto resolved = resolve_input(path);
    labeled = looks_labeled(resolved);
    return load_tsv(resolved, labeled);
}

std::vector<Tweet> load_labeled_clean(const fs::path& path) {
    return clean_corpus(load_tsv(resolve_input(path), true)).tweets;
}

void print_metrics(const Metrics& m, std::ostream& os = std::cout) {
    os << "precision=" << format_double(m.precision) << " recall=" << format_double(m.recall)
       << " f1=" << format_double(m.f1) << " accuracy=" << format_double(m.accuracy) << " (tp=" << m.tp
       << " fp=" << m.fp << " fn=" << m.fn << " tn=" << m.tn << ")\n";
}

KeyValues metrics_entries(const Metrics& m, const std::string& prefix = "") {
    return {{prefix + "precision", format_double(m.precision)},
            {prefix + "recall", format_double(m.recall)},
            {prefix + "f1", format_double(m.f1)},
            {prefix + "accuracy", format_double(m.accuracy)},
            {prefix + "tp", std::to_string(m.tp)},
            {prefix + "fp", std::to_string(m.fp)},
            {prefix + "fn", std::to_string(m.fn)},
            {prefix + "tn", std::to_string(m.tn)}};
}

// Comma lists are taken as one string so a later flag replaces a config
// entry wholesale instead of appending to it.
template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = std::min(text.find(',', pos), text.size());
        const auto item = text.substr(pos, comma - pos);
        T value{};
        auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
        if (item.empty() || ec != std::errc{} || end != item.data() + item.size())
            throw ConfigError(std::string("bad ") + what + " entry '" + item + "'");
        out.push_back(value);
        pos = comma + 1;
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Options shared by train and bag.
struct FitFlags {
    std::string model = "attbilstm";
    std::uint64_t seed = 0;
    std::size_t max_len = 128;
    std::size_t batch_size = 8;
    std::size_t epochs = 0;  // 0: per-kind default
    double lr = 0.0;         // 0: per-kind default
    double dropout = 0.2;
    std::size_t units = 150;
    std::size_t embedding_dim = 300;
    std::size_t min_freq = 1;
    std::size_t patience = 3;
    std::string vectors;
    std::string filter_sizes = "3,4,5";
    std::size_t filters = 100;
    std::size_t tf_layers = 2;
    std::size_t tf_heads = 4;
    std::size_t tf_dim = 128;
    std::size_t tf_ff = 256;
    bool freeze_embeddings = false;

    void attach(CLI::App* app) {
        app->add_option("--model", model, "cnn | lstm | bilstm | attbilstm | transformer");
        app->add_option("--seed", seed, "Seed for every random stream");
        app->add_option("--max-len", max_len, "Tokens kept per text");
        app->add_option("--batch-size", batch_size, "Minibatch size");
        app->add_option("--epochs", epochs, "Epoch budget (default 20, transformer 10)");
        app->add_option("--lr", lr, "Adam learning rate (default 1e-3, transformer 4e-5)");
        app->add_option("--dropout", dropout, "Dropout before the output layer");
        app->add_option("--units", units, "LSTM units per direction");
        app->add_option("--embedding-dim", embedding_dim, "Word vector width");
        app->add_option("--min-freq", min_freq, "Minimum token count for the vocabulary");
        app->add_option("--patience", patience, "Early-stopping patience in epochs");
        app->add_option("--vectors", vectors, "Pre-trained .vec word vectors");
        app->add_option("--filter-sizes", filter_sizes, "Comma-separated CNN filter widths");
        app->add_option("--filters", filters, "CNN filters per width");
        app->add_option("--tf-layers", tf_layers, "Transformer layers");
        app->add_option("--tf-heads", tf_heads, "Transformer attention heads");
        app->add_option("--tf-dim", tf_dim, "Transformer model width");
        app->add_option("--tf-ff", tf_ff, "Transformer feed-forward width");
        app->add_flag("--freeze-embeddings", freeze_embeddings, "Keep the embedding table fixed");
    }

    FitOptions resolve() const {
        const auto kind = parse_model_kind(model);
        if (!kind) throw ConfigError("unknown model kind '" + model + "'");
        FitOptions o;
        o.model.kind = *kind;
        o.model.embedding_dim = embedding_dim;
        o.model.max_len = max_len;
        o.model.dropout = dropout;
        o.model.rnn_units = units;
        o.model.cnn_filter_sizes = parse_list<std::size_t>(filter_sizes, "filter-sizes");
        o.model.cnn_filters_per_size = filters;
        o.model.tf_layers = tf_layers;
        o.model.tf_heads = tf_heads;
        o.model.tf_model_dim = tf_dim;
        o.model.tf_ff_dim = tf_ff;
        o.model.freeze_embeddings = freeze_embeddings;
        o.model.validate();

        o.train = TrainConfig::defaults_for(*kind);
        if (epochs) o.train.epochs = epochs;
        if (lr > 0.0) o.train.lr = lr;
        o.train.batch_size = batch_size;
        o.train.patience = patience;
        o.train.validate();

        o.min_freq = min_freq;
        if (min_freq == 0) throw ConfigError("min-freq must be positive");
        if (!vectors.empty()) o.vectors = resolve_input(vectors);
        return o;
    }
};

int cmd_preprocess(const std::string& in_path, const std::string& out_path) {
    bool labeled = false;
    const auto tweets = load_any(in_path, labeled);
    const auto report = clean_corpus(tweets);
    write_tsv(out_path, report.tweets, labeled);
    std::cout << "records=" << report.tweets.size() << " emptied=" << report.emptied << "\n";
    return kExitOk;
}

int cmd_train(const std::string& train_path, const std::string& val_path, const FitFlags& flags,
              const fs::path& out, fs::path history_path, fs::path summary_path) {
    const auto options = flags.resolve();
    const auto train_set = load_labeled_clean(train_path);
    const auto val_set = load_labeled_clean(val_path);
    auto fitted = fit(train_set, val_set, options, flags.seed);

    if (history_path.empty()) history_path = out.string() + ".history.tsv";
    if (summary_path.empty()) summary_path = out.string() + ".summary";
    save_checkpoint(out, fitted.model, fitted.vocab);
    write_history_log(history_path, fitted.history);

    KeyValues summary{{"kind", std::string(to_string(options.model.kind))},
                      {"seed", std::to_string(flags.seed)},
                      {"vocab_size", std::to_string(fitted.vocab.size())},
                      {"parameters", std::to_string(fitted.model.parameter_count())},
                      {"epochs_run", std::to_string(fitted.history.epochs.size())},
                      {"best_epoch", std::to_string(fitted.history.best_epoch)},
                      {"stopped_early", fitted.history.stopped_early ? "true" : "false"}};
    const auto val = metrics_entries(fitted.history.best().val, "val_");
    summary.insert(summary.end(), val.begin(), val.end());
    write_key_values(summary_path, summary);

    std::cout << "best_epoch=" << fitted.history.best_epoch << " of " << fitted.history.epochs.size()
              << (fitted.history.stopped_early ? " (stopped early)" : "") << "\nvalidation: ";
    print_metrics(fitted.history.best().val);
    return kExitOk;
}

int cmd_predict(const std::string& ckpt_path, const std::string& test_path, const fs::path& out) {
    const auto ckpt = load_checkpoint(resolve_input(ckpt_path));
    bool labeled = false;
    const auto test = clean_corpus(load_any(test_path, labeled)).tweets;
    const auto labels = predict_labels(ckpt.model, ckpt.vocab, test);
    std::vector<std::string> ids;
    for (const auto& t : test) ids.push_back(t.id);
    write_predictions(out, ids, labels);
    std::cout << "predictions=" << labels.size() << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path, const fs::path& summary_path) {
    const auto preds = load_predictions(resolve_input(pred_path));
    const auto gold = load_tsv(resolve_input(gold_path), true);
    if (preds.size() != gold.size()) {
        throw Error("prediction file has " + std::to_string(preds.size()) + " rows but gold has " +
                    std::to_string(gold.size()));
    }
    std::unordered_map<std::string, Label> by_id;
    for (const auto& [id, label] : preds) {
        if (!by_id.emplace(id, label).second) throw Error("duplicate prediction id '" + id + "'");
    }
    std::vector<Label> predicted;
    std::vector<Label> expected;
    for (const auto& g : gold) {
        auto it = by_id.find(g.id);
        if (it == by_id.end()) throw Error("no prediction for id '" + g.id + "'");
        predicted.push_back(it->second);
        expected.push_back(*g.label);
    }
    const auto m = evaluate(predicted, expected);
    print_metrics(m);
    write_key_values(summary_path.empty() ? fs::path(pred_path + ".metrics") : summary_path, metrics_entries(m));
    return kExitOk;
}

int cmd_bag(const std::string& train_path, const std::string& val_path, const std::string& test_path,
            const FitFlags& flags, const std::string& seed_list, std::size_t k, std::size_t jobs,
            const fs::path& out_dir) {
    const auto options = flags.resolve();
    std::vector<std::uint64_t> seeds;
    if (!seed_list.empty()) seeds = parse_list<std::uint64_t>(seed_list, "seeds");
    if (seeds.empty()) {
        if (k == 0) throw ConfigError("k must be positive");
        seeds = default_bag_seeds(flags.seed, k);
    } else if (k != 0 && k != seeds.size()) {
        throw ConfigError("--k disagrees with the number of --seeds");
    }
    const auto global = merge_global(load_labeled_clean(train_path), load_labeled_clean(val_path));
    bool labeled = false;
    const auto test = clean_corpus(load_any(test_path, labeled)).tweets;

    const auto bag = bag_train(global, seeds, options, jobs);
    fs::create_directories(out_dir);

    std::vector<ManifestMember> members;
    for (std::size_t i = 0; i < bag.members.size(); ++i) {
        const auto& m = bag.members[i];
        const std::string stem = "member_" + std::to_string(i);
        save_checkpoint(out_dir / (stem + ".ckpt"), m.fitted.model, m.fitted.vocab);
        write_history_log(out_dir / (stem + ".history.tsv"), m.fitted.history);
        members.push_back({m.seed, stem + ".ckpt", m.fitted.history.best().val, m.fitted.history.best_epoch});
    }

    const auto votes = member_votes(bag, test);
    const auto final_labels = majority_vote(votes);
    std::vector<std::string> ids;
    for (const auto& t : test) ids.push_back(t.id);
    write_predictions(out_dir / "predictions.tsv", ids, final_labels);

    std::ofstream vote_file(out_dir / "votes.tsv", std::ios::binary | std::ios::trunc);
    vote_file << "Id";
    for (std::size_t i = 0; i < votes.size(); ++i) vote_file << "\tmember_" << i;
    vote_file << "\n";
    for (std::size_t j = 0; j < ids.size(); ++j) {
        vote_file << ids[j];
        for (const auto& row : votes) vote_file << '\t' << to_string(row[j]);
        vote_file << '\n';
    }
    if (!vote_file) throw Error("write failed: votes.tsv");

    KeyValues extra{{"global_records", std::to_string(global.size())},
                    {"test_records", std::to_string(test.size())},
                    {"predictions", "predictions.tsv"},
                    {"created", utc_timestamp()}};
    write_key_values(out_dir / "manifest.txt", make_manifest(options.model.kind, members, extra));

    for (std::size_t i = 0; i < members.size(); ++i) {
        std::cout << "member " << i << " seed=" << members[i].seed << " val ";
        print_metrics(members[i].val);
    }
    std::cout << "predictions=" << final_labels.size() << " -> " << (out_dir / "predictions.tsv").string()
              << "\n";
    return kExitOk;
}

// Expands "--config FILE" into "--key=value" arguments placed right after
// the subcommand so that explicit flags, which come later, take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::string> out;
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[++i];
        } else if (args[i].starts_with("--config=")) {
            config_path = args[i].substr(9);
        } else {
            out.push_back(args[i]);
        }
    }
    if (config_path.empty() || out.empty()) return out;
    std::vector<std::string> injected;
    for (const auto& [key, value] : read_key_values(resolve_input(config_path)))
        injected.push_back("--" + key + "=" + value);
    out.insert(out.begin() + 1, injected.begin(), injected.end());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Informative-tweet classification: cleaning, neural classifiers, bagging", "tweetbag"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_unused;
    app.add_option("--config", config_unused, "key=value file; explicit flags override its entries");

    std::string in_path, out_path;
    auto* pre = app.add_subcommand("preprocess", "Clean a TSV corpus");
    pre->add_option("--in", in_path, "Input TSV")->required();
    pre->add_option("--out", out_path, "Output TSV")->required();

    FitFlags train_flags;
    std::string train_path, val_path, history_path, summary_path;
    auto* tr = app.add_subcommand("train", "Train one model on a train/validation split");
    tr->add_option("--train", train_path, "Labeled training TSV")->required();
    tr->add_option("--val", val_path, "Labeled validation TSV")->required();
    tr->add_option("--out", out_path, "Checkpoint path")->required();
    tr->add_option("--history", history_path, "Epoch log (default <out>.history.tsv)");
    tr->add_option("--summary", summary_path, "key=value summary (default <out>.summary)");
    train_flags.attach(tr);

    std::string ckpt_path, test_path;
    auto* pr = app.add_subcommand("predict", "Label a TSV with a trained checkpoint");
    pr->add_option("--checkpoint", ckpt_path, "Checkpoint path")->required();
    pr->add_option("--test", test_path, "TSV to label")->required();
    pr->add_option("--out", out_path, "Predictions TSV")->required();

    std::string pred_path, gold_path, eval_summary;
    auto* ev = app.add_subcommand("evaluate", "Score predictions against gold labels");
    ev->add_option("--pred", pred_path, "Predictions TSV (Id, Label)")->required();
    ev->add_option("--gold", gold_path, "Labeled TSV")->required();
    ev->add_option("--summary", eval_summary, "key=value metrics file (default <pred>.metrics)");

    FitFlags bag_flags;
    std::string out_dir;
    std::string seeds;
    std::size_t k = kDefaultBagSize;
    std::size_t jobs = 1;
    auto* bg = app.add_subcommand("bag", "Train k members on shuffled resplits and vote on the test set");
    bg->add_option("--train", train_path, "Labeled training TSV")->required();
    bg->add_option("--val", val_path, "Labeled validation TSV")->required();
    bg->add_option("--test", test_path, "TSV to label")->required();
    bg->add_option("--out-dir", out_dir, "Output directory")->required();
    bg->add_option("--seeds", seeds, "Comma-separated member seeds");
    bg->add_option("--k", k, "Members when --seeds is absent (derived from --seed)");
    bg->add_option("--jobs", jobs, "Members trained concurrently");
    bag_flags.attach(bg);

    const auto args = expand_config(argc, argv);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*pre) return cmd_preprocess(in_path, out_path);
        if (*tr) return cmd_train(train_path, val_path, train_flags, out_path, history_path, summary_path);
        if (*pr) return cmd_predict(ckpt_path, test_path, out_path);
        if (*ev) return cmd_evaluate(pred_path, gold_path, eval_summary);
        if (*bg) {
            if (bg->count("--seeds") && !bg->count("--k")) k = 0;
            return cmd_bag(train_path, val_path, test_path, bag_flags, seeds, k, jobs, out_dir);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
