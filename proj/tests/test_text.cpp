#include "imagetalk/digest.hpp"
#include "imagetalk/errors.hpp"
#include "imagetalk/text.hpp"

#include <doctest.h>

#include <vector>

using namespace imagetalk;

TEST_CASE("punctuation covers every P* category and nothing else") {
    for (char32_t cp : {U'.', U',', U'!', U'?', U'\'', U'"', U'-', U'(', U')', U'_', U'—', U'“', U'¿',
                        U'。'})
        CHECK(text::is_punctuation(cp));
    for (char32_t cp : {U'a', U'Z', U'0', U' ', U'$', U'+', U'=', U'é', U'\n', U'€'})
        CHECK_FALSE(text::is_punctuation(cp));
}

TEST_CASE("utf-8 decoding") {
    CHECK(text::decode_utf8("caf\xC3\xA9") == std::vector<char32_t>{U'c', U'a', U'f', U'é'});
    CHECK(text::code_point_count("caf\xC3\xA9") == 4);
    CHECK(text::code_point_count("") == 0);
    SUBCASE("invalid bytes become one replacement character each") {
        const auto cps = text::decode_utf8("a\xFF\xFE" "b");
        CHECK(cps == std::vector<char32_t>{U'a', 0xFFFD, 0xFFFD, U'b'});
    }
    SUBCASE("round trip") {
        const std::string s = "\xE2\x80\x9CHi\xE2\x80\x9D \xF0\x9F\x99\x82";
        CHECK(text::encode_utf8(text::decode_utf8(s)) == s);
    }
}

TEST_CASE("strip, lowercase, split") {
    CHECK(text::strip_punctuation("Hi, there!") == "Hi there");
    CHECK(text::strip_punctuation("\xE2\x80\x9CLook\xE2\x80\x9D \xE2\x80\x94 now") == "Look  now");
    CHECK(text::to_lower("Hello W\xC3\x89") == "hello w\xC3\xA9");
    CHECK(text::split_whitespace("  a \t b\nc  ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(text::split_whitespace("a\xC2\xA0" "b") == std::vector<std::string>{"a", "b"});
    CHECK(text::split_whitespace("   ").empty());
    CHECK(text::tokenize("The Dog, in the PARK!") == std::vector<std::string>{"the", "dog", "in", "the", "park"});
    CHECK(text::tokenize("didn't stop") == std::vector<std::string>{"didnt", "stop"});
    CHECK(text::tokenize("...").empty());
    CHECK(text::trim("  x y \n") == "x y");
    CHECK(text::trim(" \t ").empty());
}

TEST_CASE("sha256 and base64") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
    for (const std::string& s : std::vector<std::string>{"", "f", "fo", "foo", "foob", "fooba", "foobar", std::string("\0\xFF\x10", 3)})
        CHECK(base64_decode(base64_encode(s)) == s);
    CHECK_THROWS_AS(base64_decode("Zm9v!"), Error);
    CHECK_THROWS_AS(base64_decode("Zm9"), Error);
}
