#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tweetbag/corpus.hpp"
#include "tweetbag/keyvalue.hpp"
#include "tweetbag/train.hpp"

namespace tweetbag {

inline constexpr std::size_t kDefaultBagSize = 7;

// Seven (or k) distinct member seeds derived from one base seed.
std::vector<std::uint64_t> default_bag_seeds(std::uint64_t base_seed, std::size_t k = kDefaultBagSize);

struct BagMember {
    std::uint64_t seed = 0;
    FittedModel fitted;
};

struct BagResult {
    std::vector<BagMember> members;

    std::vector<std::uint64_t> seeds() const;
    std::vector<Metrics> member_val_metrics() const;  // at each member's best epoch
};

/// Trains one member per seed on shuffle_split(global, seed), each with its
/// own vocabulary built from its training part. Up to `jobs` members train
/// concurrently; results are collected after all of them finish. A member
/// failure is rethrown naming its seed.
BagResult bag_train(std::span<const Tweet> global, std::span<const std::uint64_t> seeds,
                    const FitOptions& options, std::size_t jobs = 1);

/// Per column of a k x n vote matrix, the label with strictly more votes;
/// a tie (only possible for even k) goes to Informative.
std::vector<Label> majority_vote(std::span<const std::vector<Label>> votes);

// Each member's thresholded predictions, one row per member.
std::vector<std::vector<Label>> member_votes(const BagResult& bag, std::span<const Tweet> test);

// majority_vote over member_votes, in input order.
std::vector<Label> bag_predict(const BagResult& bag, std::span<const Tweet> test);

struct ManifestMember {
    std::uint64_t seed = 0;
    std::string checkpoint;  // relative to the manifest's directory
    Metrics val;
    std::size_t best_epoch = 0;
};

/// Line-oriented key=value bag manifest: kind, k, the seed list, then per
/// member i the keys member.i.{seed,checkpoint,best_epoch,precision,recall,
/// f1,accuracy}. Extra entries (timestamps, notes) pass through untouched.
KeyValues make_manifest(ModelKind kind, std::span<const ManifestMember> members, const KeyValues& extra = {});
std::vector<ManifestMember> parse_manifest_members(const KeyValues& manifest);

}  // namespace tweetbag
