#include "tweetbag/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <optional>
#include <set>
#include <thread>

#include "tweetbag/error.hpp"
#include "tweetbag/rng.hpp"

namespace tweetbag {
namespace {

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("manifest: bad integer for " + key);
    return v;
}

double parse_f64(const std::string& s, const std::string& key) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("manifest: bad number for " + key);
    return v;
}

const std::string& require_value(const KeyValues& kv, const std::string& key) {
    const auto* v = find_value(kv, key);
    if (!v) throw Error("manifest: missing " + key);
    return *v;
}

}  // namespace

std::vector<std::uint64_t> default_bag_seeds(std::uint64_t base_seed, std::size_t k) {
    std::vector<std::uint64_t> seeds;
    std::set<std::uint64_t> seen;
    for (std::uint64_t stream = 0; seeds.size() < k; ++stream) {
        const auto s = derive_seed(base_seed, 1000 + stream);
        if (seen.insert(s).second) seeds.push_back(s);
    }
    return seeds;
}

std::vector<std::uint64_t> BagResult::seeds() const {
    std::vector<std::uint64_t> out;
    for (const auto& m : members) out.push_back(m.seed);
    return out;
}

std::vector<Metrics> BagResult::member_val_metrics() const {
    std::vector<Metrics> out;
    for (const auto& m : members) out.push_back(m.fitted.history.best().val);
    return out;
}

BagResult bag_train(std::span<const Tweet> global, std::span<const std::uint64_t> seeds,
                    const FitOptions& options, std::size_t jobs) {
    if (seeds.empty()) throw Error("bag needs at least one seed");
    for (const auto& t : global) {
        if (!t.label) throw Error("bag training record '" + t.id + "' has no label");
    }
    const auto splits = make_bag_splits(global, seeds);

    const std::size_t k = seeds.size();
    std::vector<std::optional<BagMember>> slots(k);
    std::vector<std::exception_ptr> errors(k);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < k; i = next++) {
            try {
                slots[i] = BagMember{seeds[i], fit(splits[i].train, splits[i].val, options, seeds[i])};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, k);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < k; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw Error("bag member with seed " + std::to_string(seeds[i]) + " failed: " + e.what());
        }
    }
    BagResult bag;
    for (auto& s : slots) bag.members.push_back(std::move(*s));
    return bag;
}

std::vector<Label> majority_vote(std::span<const std::vector<Label>> votes) {
    if (votes.empty()) throw Error("majority_vote: no members");
    const std::size_t n = votes.front().size();
    if (n == 0) throw Error("majority_vote: no instances");
    for (const auto& row : votes) {
        if (row.size() != n) throw Error("majority_vote: members disagree on the number of instances");
    }
    std::vector<Label> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t informative = 0;
        for (const auto& row : votes) informative += row[i] == Label::Informative ? 1 : 0;
        const std::size_t uninformative = votes.size() - informative;
        out[i] = informative >= uninformative ? Label::Informative : Label::Uninformative;
    }
    return out;
}

std::vector<std::vector<Label>> member_votes(const BagResult& bag, std::span<const Tweet> test) {
    std::vector<std::vector<Label>> votes;
    votes.reserve(bag.members.size());
    for (const auto& m : bag.members) votes.push_back(predict_labels(m.fitted.model, m.fitted.vocab, test));
    return votes;
}

std::vector<Label> bag_predict(const BagResult& bag, std::span<const Tweet> test) {
    return majority_vote(member_votes(bag, test));
}

KeyValues make_manifest(ModelKind kind, std::span<const ManifestMember> members, const KeyValues& extra) {
    KeyValues kv;
    kv.emplace_back("kind", std::string(to_string(kind)));
    kv.emplace_back("k", std::to_string(members.size()));
    std::string seeds;
    for (const auto& m : members) seeds += (seeds.empty() ? "" : ",") + std::to_string(m.seed);
    kv.emplace_back("seeds", seeds);
    kv.emplace_back("vocabulary", "per-member (built from each member's training split)");
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto pre = "member." + std::to_string(i) + ".";
        const auto& m = members[i];
        kv.emplace_back(pre + "seed", std::to_string(m.seed));
        kv.emplace_back(pre + "checkpoint", m.checkpoint);
        kv.emplace_back(pre + "best_epoch", std::to_string(m.best_epoch));
        kv.emplace_back(pre + "precision", format_double(m.val.precision));
        kv.emplace_back(pre + "recall", format_double(m.val.recall));
        kv.emplace_back(pre + "f1", format_double(m.val.f1));
        kv.emplace_back(pre + "accuracy", format_double(m.val.accuracy));
    }
    kv.insert(kv.end(), extra.begin(), extra.end());
    return kv;
}

std::vector<ManifestMember> parse_manifest_members(const KeyValues& manifest) {
    const std::size_t k = parse_u64(require_value(manifest, "k"), "k");
    std::vector<ManifestMember> members(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto pre = "member." + std::to_string(i) + ".";
        auto& m = members[i];
        m.seed = parse_u64(require_value(manifest, pre + "seed"), pre + "seed");
        m.checkpoint = require_value(manifest, pre + "checkpoint");
        m.best_epoch = parse_u64(require_value(manifest, pre + "best_epoch"), pre + "best_epoch");
        m.val.precision = parse_f64(require_value(manifest, pre + "precision"), pre + "precision");
        m.val.recall = parse_f64(require_value(manifest, pre + "recall"), pre + "recall");
        m.val.f1 = parse_f64(require_value(manifest, pre + "f1"), pre + "f1");
        m.val.accuracy = parse_f64(require_value(manifest, pre + "accuracy"), pre + "accuracy");
    }
    return members;
}

}  // namespace tweetbag
