#include "doctest.h"

#include "gvqa/error.hpp"
#include "gvqa/prompt.hpp"
#include "gvqa/text.hpp"

using namespace gvqa;

TEST_CASE("tokenize lowercases and splits on whitespace") {
    const auto toks = tokenize("Track the  2nd RED square\nthat appears");
    CHECK(toks == std::vector<std::string>{"track", "the", "2nd", "red", "square", "that",
                                           "appears"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("   \t  ").empty());
}

TEST_CASE("token vocab maps unseen tokens to UNK") {
    const TokenVocab v = TokenVocab::from_corpus({"red square", "blue circle"});
    CHECK(v.id_or_unk("red") != 0);
    CHECK(v.id_or_unk("violet") == 0);
    CHECK(v.tokens()[0] == std::string(TokenVocab::kUnk));
    const auto ids = v.encode("RED violet");
    REQUIRE(ids.size() == 2);
    CHECK(ids[0] == v.id_or_unk("red"));
    CHECK(ids[1] == 0);
}

TEST_CASE("compose follows the template byte for byte") {
    const Prompt p = compose("Where is the cup?", "red cup");
    CHECK(p.text == "Where is the cup? Track the red cup");
    CHECK(p.question == "Where is the cup?");
    CHECK(p.answer == "red cup");
}

TEST_CASE("compose on minimal strings") {
    CHECK(compose("Q", "A").text == "Q Track the A");
}

TEST_CASE("compose rejects empty answers") {
    CHECK_THROWS_AS(compose("Q", ""), Error);
    CHECK_THROWS_AS(compose("Q", "   "), Error);
    CHECK_THROWS_AS(compose("", "A"), Error);
}

TEST_CASE("compose applies no normalization") {
    CHECK(compose("q?", " Red  Cup ").text == "q? Track the  Red  Cup ");
    CHECK(compose("A B", "c").text == "A B Track the c");
}

TEST_CASE("compose is injective over question/answer pairs") {
    // The separator is a fixed literal, so distinct pairs with the same
    // concatenation cannot collide unless the question itself embeds it.
    const Prompt a = compose("q one", "x");
    const Prompt b = compose("q", "one x");
    CHECK(a.text != b.text);
}
