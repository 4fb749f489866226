#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "synthetic.hpp"
#include "temp_dir.hpp"
#include "tweetbag/corpus.hpp"
#include "tweetbag/error.hpp"
#include "tweetbag/rng.hpp"

using namespace tweetbag;
using tweetbag::testing::TempDir;

TEST_CASE("labels parse case-insensitively and print upper-case") {
    CHECK(parse_label("INFORMATIVE") == Label::Informative);
    CHECK(parse_label("uninformative") == Label::Uninformative);
    CHECK_FALSE(parse_label("maybe").has_value());
    CHECK(to_string(Label::Informative) == "INFORMATIVE");
    CHECK(to_string(Label::Uninformative) == "UNINFORMATIVE");
}

TEST_CASE("parse_tsv maps fields directly") {
    auto rows = parse_tsv("17\tNew cases reported HTTPURL\tINFORMATIVE\n", true);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == Tweet{"17", "New cases reported HTTPURL", Label::Informative});

    auto unlabeled = parse_tsv("9\thello\n", false);
    REQUIRE(unlabeled.size() == 1);
    CHECK(unlabeled[0].id == "9");
    CHECK(unlabeled[0].text == "hello");
    CHECK_FALSE(unlabeled[0].label.has_value());
}

TEST_CASE("parse_tsv skips header, blank lines, BOM and CR") {
    auto rows = parse_tsv("\xEF\xBB\xBFId\tText\tLabel\r\n1\ta\tINFORMATIVE\r\n\r\n2\tb\tUNINFORMATIVE\n", true);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].text == "b");
    CHECK(rows[1].label == Label::Uninformative);
}

TEST_CASE("parse errors carry the line number") {
    try {
        parse_tsv("3\tonly-two-fields\n", true);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
    }
    try {
        parse_tsv("Id\tText\tLabel\n1\tok\tINFORMATIVE\n2\tbad\tPERHAPS\n", true);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_tsv("1\ta\tINFORMATIVE\n1\tb\tINFORMATIVE\n", true), ParseError);
    CHECK_THROWS_AS(parse_tsv("\ta\tINFORMATIVE\n", true), ParseError);
    CHECK_THROWS_AS(load_tsv("/nonexistent/file.tsv", true), Error);
}

TEST_CASE("write_tsv round-trips through load_tsv") {
    TempDir dir;
    std::vector<Tweet> tweets{{"1", "first text", Label::Informative}, {"2", "", Label::Uninformative}};
    write_tsv(dir / "a.tsv", tweets, true);
    CHECK(load_tsv(dir / "a.tsv", true) == tweets);

    std::vector<Tweet> bad{{"1", "tab\there", Label::Informative}};
    CHECK_THROWS_AS(write_tsv(dir / "b.tsv", bad, true), Error);
}

TEST_CASE("merge_global concatenates and rejects collisions") {
    CHECK(merge_global({}, {}).empty());
    auto train = testing::labeled_stub_corpus(70, 30, 1);
    std::vector<Tweet> val;
    for (int i = 0; i < 10; ++i) val.push_back({"v" + std::to_string(i), "x", Label::Informative});
    auto global = merge_global(train, val);
    CHECK(global.size() == 80);
    CHECK(count_label(global, Label::Informative) == 40);
    val.push_back(train.front());
    CHECK_THROWS_AS(merge_global(train, val), Error);
}

TEST_CASE("positive counts add up across the merge") {
    auto train = testing::labeled_stub_corpus(7000, 3303, 11);
    auto val = testing::labeled_stub_corpus(1000, 472, 12);
    for (auto& t : val) t.id = "v" + t.id;
    auto global = merge_global(train, val);
    CHECK(global.size() == 8000);
    CHECK(count_label(global, Label::Informative) == 3775);
}

TEST_CASE("split sizes follow the 7:1 ratio") {
    CHECK(train_split_size(8000) == 7000);
    CHECK(train_split_size(80) == 70);
    CHECK(train_split_size(8) == 7);
    CHECK(train_split_size(9) == 8);  // 7.875 rounds to 8
    CHECK(train_split_size(12) == 11);  // 10.5 rounds half up

    auto global = testing::labeled_stub_corpus(80, 35, 2);
    auto split = shuffle_split(global, 42);
    CHECK(split.train.size() == 70);
    CHECK(split.val.size() == 10);
    CHECK(split.seed == 42);
    CHECK_THROWS_AS(shuffle_split(testing::labeled_stub_corpus(7, 3, 1), 1), Error);
}

TEST_CASE("shuffle_split is a deterministic partition") {
    auto global = testing::labeled_stub_corpus(200, 90, 3);
    auto a = shuffle_split(global, 7);
    auto b = shuffle_split(global, 7);
    auto c = shuffle_split(global, 8);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.train != c.train);

    std::multiset<std::string> ids;
    for (const auto& t : a.train) ids.insert(t.id);
    for (const auto& t : a.val) ids.insert(t.id);
    std::multiset<std::string> expected;
    for (const auto& t : global) expected.insert(t.id);
    CHECK(ids == expected);
    CHECK(count_label(a.train, Label::Informative) + count_label(a.val, Label::Informative) == 90);
}

TEST_CASE("make_bag_splits requires distinct seeds") {
    auto global = testing::labeled_stub_corpus(80, 40, 4);
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7};
    auto splits = make_bag_splits(global, seeds);
    REQUIRE(splits.size() == 7);
    for (std::size_t i = 0; i < splits.size(); ++i) {
        CHECK(splits[i].seed == seeds[i]);
        CHECK(splits[i].train.size() == 70);
    }
    std::vector<std::uint64_t> dup{1, 2, 1};
    CHECK_THROWS_AS(make_bag_splits(global, dup), Error);
}

TEST_CASE("write_predictions writes the two-column format") {
    TempDir dir;
    std::vector<std::string> ids{"1"};
    std::vector<Label> labels{Label::Informative};
    write_predictions(dir / "p.tsv", ids, labels, false);
    CHECK(read_file(dir / "p.tsv") == "1\tINFORMATIVE\n");

    write_predictions(dir / "h.tsv", ids, labels);
    CHECK(read_file(dir / "h.tsv") == "Id\tLabel\n1\tINFORMATIVE\n");
    auto back = load_predictions(dir / "h.tsv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].first == "1");
    CHECK(back[0].second == Label::Informative);

    write_predictions(dir / "e.tsv", {}, {});
    CHECK(read_file(dir / "e.tsv") == "Id\tLabel\n");

    std::vector<Label> two{Label::Informative, Label::Uninformative};
    CHECK_THROWS_AS(write_predictions(dir / "m.tsv", ids, two), Error);
}

TEST_CASE("rng primitives are reproducible and in range") {
    Rng a(5), b(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(a.below(7) < 7);
        b.below(7);
    }
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));

    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    auto w = v;
    Rng(9).shuffle(w);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
}
