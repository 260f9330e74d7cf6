#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "lge/textcodec.hpp"

using namespace lge;

TEST_CASE("build_vocab counts distinct tokens plus reserved ids") {
    std::vector<std::string> corpus{"pick up pot", "pick up fork"};
    Vocabulary v = Vocabulary::build(corpus);
    CHECK(v.size() == 6);  // pick, up, pot, fork + PAD/UNK
    CHECK(v.id_of("pick") == 2);
    CHECK(v.id_of("up") == 3);
    CHECK(v.id_of("pot") == 4);
    CHECK(v.id_of("fork") == 5);
}

TEST_CASE("empty corpus is an error") {
    std::vector<std::string> empty;
    CHECK_THROWS_AS(Vocabulary::build(empty), std::invalid_argument);
    std::vector<std::string> blank{""};
    CHECK_THROWS_AS(Vocabulary::build(blank), std::invalid_argument);
}

TEST_CASE("vocab size equals an independent distinct-token recount") {
    std::vector<std::string> corpus{
        "you are in the kitchen. you see: stove (off), sink.",
        "Pick up the red apple!", "move the red apple to the sink",
        "your inventory is empty."};
    Vocabulary v = Vocabulary::build(corpus);
    std::set<std::string> distinct;
    for (const auto& text : corpus)
        for (const auto& tok : tokenize(text)) distinct.insert(tok);
    CHECK(v.size() == distinct.size() + 2);
}

TEST_CASE("encode maps tokens, UNKs and truncates") {
    Vocabulary v = Vocabulary::build(std::vector<std::string>{"pick up pot eat"});
    CHECK(encode("Pick up pot", v, 16) == TokenIds{2, 3, 4});
    CHECK(encode("eat zorgblat", v, 16) == TokenIds{5, Vocabulary::kUnk});
    CHECK(encode("pick up pot pick up", v, 1) == TokenIds{2});
    CHECK_THROWS_AS(encode("pick", v, 0), std::invalid_argument);
}

TEST_CASE("encode is deterministic and round-trips in-vocabulary text") {
    std::vector<std::string> corpus{"the quick brown fox jumps over the lazy dog",
                                    "pack my box with five dozen jugs"};
    Vocabulary v = Vocabulary::build(corpus);
    RngStream rng(7, "codec");
    std::vector<std::string> words;
    for (const auto& text : corpus)
        for (const auto& tok : tokenize(text)) words.push_back(tok);
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const std::size_t len = 1 + rng.index(8);
        for (std::size_t i = 0; i < len; ++i) {
            if (i) text += ' ';
            text += words[rng.index(words.size())];
        }
        TokenIds ids = encode(text, v, 16);
        CHECK(ids == encode(text, v, 16));
        CHECK(decode(ids, v) == lowercase(text));
    }
}

TEST_CASE("tokenizer strips surrounding punctuation and lowercases") {
    auto toks = tokenize("You see: a Stove (off), a sink!");
    CHECK(toks == std::vector<std::string>{"you", "see", "a", "stove", "off", "a", "sink"});
    CHECK(tokenize("--- ... !!!").empty());
}

TEST_CASE("vocabulary serialization round-trips") {
    Vocabulary v = Vocabulary::build(std::vector<std::string>{"alpha beta gamma"});
    std::stringstream ss;
    v.save(ss);
    Vocabulary w = Vocabulary::load(ss);
    CHECK(w.size() == v.size());
    for (const char* t : {"alpha", "beta", "gamma"}) CHECK(w.id_of(t) == v.id_of(t));
    CHECK(w.token_of(0) == "<pad>");
    CHECK(w.token_of(1) == "<unk>");
}
