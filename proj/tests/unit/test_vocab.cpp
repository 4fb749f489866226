#include <doctest.h>

#include <cmath>

#include "temp_dir.hpp"
#include "tweetbag/error.hpp"
#include "tweetbag/vocab.hpp"

using namespace tweetbag;

namespace {

std::vector<Tweet> one(const std::string& text) { return {{"1", text, Label::Informative}}; }

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation") {
    CHECK(tokenize("New cases: 5!") == std::vector<std::string>{"new", "cases", ":", "5", "!"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("hello") == std::vector<std::string>{"hello"});
    CHECK(tokenize("  a\tb  ") == std::vector<std::string>{"a", "b"});
    CHECK(tokenize("don't") == std::vector<std::string>{"don", "'", "t"});
}

TEST_CASE("build_vocab orders by frequency then token") {
    auto v = build_vocab(one("a a b"));
    REQUIRE(v.size() == 4);
    CHECK(v.index_of("<pad>") == Vocabulary::kPad);
    CHECK(v.index_of("a") == 2);
    CHECK(v.index_of("b") == 3);

    auto tie = build_vocab(one("z y x"));
    CHECK(tie.index_of("x") == 2);
    CHECK(tie.index_of("z") == 4);

    CHECK(build_vocab({}).size() == 2);

    auto thresh = build_vocab(one("a a b"), 2);
    CHECK(thresh.size() == 3);
    CHECK(thresh.index_of("b") == Vocabulary::kUnk);
    CHECK_FALSE(thresh.find("b").has_value());

    CHECK(build_vocab(one("q r q")) == build_vocab(one("q r q")));
}

TEST_CASE("encode pads, truncates and maps unknowns") {
    auto v = build_vocab(one("a a b"));
    CHECK(encode("a b", v, 4) == std::vector<TokenId>{2, 3, 0, 0});
    CHECK(encode("zzz", v, 2) == std::vector<TokenId>{1, 0});
    CHECK(encode("", v, 3) == std::vector<TokenId>{0, 0, 0});

    std::string long_text;
    for (int i = 0; i < 200; ++i) long_text += (i % 2 ? "a " : "b ");
    auto ids = encode(long_text, v, 128);
    REQUIRE(ids.size() == 128);
    CHECK(ids[0] == 3);
    CHECK(ids[1] == 2);
    CHECK(ids[127] == 2);
    for (auto id : ids) CHECK(id < v.size());
}

TEST_CASE("random embeddings: PAD zero, others in range, seeded") {
    auto v = build_vocab(one("a b c"));
    auto e = random_embeddings(v, 5, 3);
    CHECK(e.rows == v.size());
    CHECK(e.dim == 5);
    for (double x : e.row(0)) CHECK(x == 0.0);
    for (std::size_t r = 1; r < e.rows; ++r)
        for (double x : e.row(r)) CHECK(std::abs(x) <= kOovInitRange);
    CHECK(random_embeddings(v, 5, 3).values == e.values);
    CHECK(random_embeddings(v, 5, 4).values != e.values);
}

TEST_CASE("vector file rows are copied, OOV rows initialised") {
    Vocabulary v({"hello", "zzz"});
    auto e = parse_vectors("2 3\nhello 1 2 3\nworld 4 5 6\n", v, 3, 1);
    const auto hello = e.row(v.index_of("hello"));
    CHECK(std::vector<double>(hello.begin(), hello.end()) == std::vector<double>{1, 2, 3});
    CHECK(e.pretrained_rows == 1);
    for (double x : e.row(v.index_of("zzz"))) CHECK(std::abs(x) <= kOovInitRange);
    for (double x : e.row(Vocabulary::kPad)) CHECK(x == 0.0);
    CHECK(parse_vectors("2 3\nhello 1 2 3\nworld 4 5 6\n", v, 3, 1).values == e.values);
}

TEST_CASE("vector file errors") {
    Vocabulary v({"hello"});
    CHECK_THROWS_AS(parse_vectors("2 300\nhello 1 2 3\n", v, 50, 1), ParseError);
    try {
        parse_vectors("2 3\nhello 1 2 3\nworld 4 five 6\n", v, 3, 1);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_vectors("1 3\nhello 1 2\n", v, 3, 1), ParseError);
    CHECK_THROWS_AS(parse_vectors("", v, 3, 1), ParseError);

    testing::TempDir dir;
    CHECK_THROWS_AS(load_vectors(dir / "missing.vec", v, 3, 1), Error);
}
