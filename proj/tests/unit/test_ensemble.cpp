#include <doctest.h>

#include <set>

#include "grad_cases.hpp"
#include "synthetic.hpp"
#include "tweetbag/ensemble.hpp"
#include "tweetbag/error.hpp"
#include "tweetbag/rng.hpp"

using namespace tweetbag;

namespace {

constexpr Label I = Label::Informative;
constexpr Label U = Label::Uninformative;

std::vector<std::vector<Label>> column(std::initializer_list<Label> votes) {
    std::vector<std::vector<Label>> m;
    for (auto v : votes) m.push_back({v});
    return m;
}

// Independent mode: count each label and keep the most frequent, scanning
// Informative first so even ties resolve to it.
Label brute_mode(const std::vector<std::vector<Label>>& votes, std::size_t col) {
    std::size_t inf = 0, uninf = 0;
    for (const auto& row : votes) (row[col] == I ? inf : uninf)++;
    return uninf > inf ? U : I;
}

FitOptions tiny_options() {
    FitOptions o;
    o.model = testing::tiny_config(ModelKind::Lstm);
    o.model.embedding_dim = 6;
    o.model.rnn_units = 6;
    o.model.max_len = 12;
    o.train = TrainConfig::defaults_for(ModelKind::Lstm);
    o.train.lr = 1e-2;
    o.train.epochs = 3;
    return o;
}

}  // namespace

TEST_CASE("majority vote examples") {
    CHECK(majority_vote(column({I, I, U, I, U, U, I})) == std::vector<Label>{I});
    CHECK(majority_vote(column({U, U, U})) == std::vector<Label>{U});
    CHECK(majority_vote(column({I, U})) == std::vector<Label>{I});
    CHECK(majority_vote(column({U, I, U, I})) == std::vector<Label>{I});
    CHECK(majority_vote(column({U})) == std::vector<Label>{U});

    std::vector<std::vector<Label>> ragged{{I, U}, {I}};
    CHECK_THROWS_AS(majority_vote(ragged), Error);
    CHECK_THROWS_AS(majority_vote({}), Error);
}

TEST_CASE("majority vote matches brute force and is row-order invariant") {
    Rng rng(31);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto k = 1 + rng.below(8);
        const auto n = 1 + rng.below(12);
        std::vector<std::vector<Label>> votes(k, std::vector<Label>(n));
        for (auto& row : votes)
            for (auto& v : row) v = rng.bernoulli(0.5) ? I : U;
        auto out = majority_vote(votes);
        REQUIRE(out.size() == n);
        for (std::size_t j = 0; j < n; ++j) CHECK(out[j] == brute_mode(votes, j));
        rng.shuffle(votes);
        CHECK(majority_vote(votes) == out);
    }
}

TEST_CASE("default bag seeds are distinct and reproducible") {
    auto s = default_bag_seeds(42);
    CHECK(s.size() == kDefaultBagSize);
    CHECK(std::set<std::uint64_t>(s.begin(), s.end()).size() == s.size());
    CHECK(default_bag_seeds(42) == s);
    CHECK(default_bag_seeds(43) != s);
    CHECK(default_bag_seeds(42, 3).size() == 3);
}

TEST_CASE("bag training: members, votes, and concurrency") {
    auto global = testing::separable_corpus({.count = 96, .positives = 48, .seed = 2});
    auto test = testing::separable_corpus({.count = 20, .positives = 10, .id_prefix = "t", .seed = 3});
    const std::vector<std::uint64_t> seeds{11, 12, 13};
    auto opts = tiny_options();

    auto serial = bag_train(global, seeds, opts, 1);
    REQUIRE(serial.members.size() == 3);
    CHECK(serial.seeds() == seeds);
    CHECK(serial.member_val_metrics().size() == 3);
    for (const auto& m : serial.members) CHECK(m.fitted.history.epochs.size() >= 1);

    // bag_predict is the vote over member predictions.
    auto votes = member_votes(serial, test);
    REQUIRE(votes.size() == 3);
    for (std::size_t i = 0; i < votes.size(); ++i)
        CHECK(votes[i] == predict_labels(serial.members[i].fitted.model, serial.members[i].fitted.vocab, test));
    CHECK(bag_predict(serial, test) == majority_vote(votes));

    auto parallel = bag_train(global, seeds, opts, 3);
    for (std::size_t i = 0; i < seeds.size(); ++i)
        CHECK(parallel.members[i].fitted.model.snapshot() == serial.members[i].fitted.model.snapshot());
    CHECK(bag_predict(parallel, test) == bag_predict(serial, test));
}

TEST_CASE("single-member bag equals its member") {
    auto global = testing::separable_corpus({.count = 64, .positives = 32, .seed = 5});
    auto test = testing::separable_corpus({.count = 10, .positives = 5, .id_prefix = "t", .seed = 6});
    const std::vector<std::uint64_t> seeds{77};
    auto bag = bag_train(global, seeds, tiny_options());
    const auto& member = bag.members[0].fitted;
    CHECK(bag_predict(bag, test) == predict_labels(member.model, member.vocab, test));

    // The member matches a direct fit on the same resplit.
    auto split = shuffle_split(global, 77);
    auto direct = fit(split.train, split.val, tiny_options(), 77);
    CHECK(direct.model.snapshot() == member.model.snapshot());
}

TEST_CASE("bag training errors") {
    auto global = testing::separable_corpus({.count = 32, .positives = 16});
    auto opts = tiny_options();
    const std::vector<std::uint64_t> dup{1, 1};
    CHECK_THROWS_AS(bag_train(global, dup, opts), Error);
    auto unlabeled = global;
    unlabeled[3].label.reset();
    const std::vector<std::uint64_t> one{1};
    CHECK_THROWS_AS(bag_train(unlabeled, one, opts), Error);

    // A member failure names its seed.
    auto broken = opts;
    broken.model.max_len = 1;
    broken.model.kind = ModelKind::Cnn;
    broken.model.cnn_filter_sizes = {1};
    broken.train.lr = 1e308;
    const std::vector<std::uint64_t> s{5};
    try {
        bag_train(global, s, broken);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("seed 5") != std::string::npos);
    }
}

TEST_CASE("manifest round trip") {
    Metrics m;
    m.precision = 0.75;
    m.recall = 0.5;
    m.f1 = 0.6;
    m.accuracy = 0.7;
    std::vector<ManifestMember> members{{3, "member_0.ckpt", m, 4}, {9, "member_1.ckpt", m, 2}};
    auto kv = make_manifest(ModelKind::AttBiLstm, members, {{"created", "now"}});
    CHECK(*find_value(kv, "kind") == "attbilstm");
    CHECK(*find_value(kv, "k") == "2");
    CHECK(*find_value(kv, "seeds") == "3,9");
    auto back = parse_manifest_members(kv);
    REQUIRE(back.size() == 2);
    CHECK(back[1].seed == 9);
    CHECK(back[1].checkpoint == "member_1.ckpt");
    CHECK(back[1].best_epoch == 2);
    CHECK(back[1].val.f1 == doctest::Approx(0.6));
}
