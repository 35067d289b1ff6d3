#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by the keystroke counter, the embedding tokenizer and
// the keyword-overlap heuristic. Invalid byte sequences decode as one U+FFFD
// per offending byte.
namespace imagetalk::text {

// Unicode general category P* (Pc, Pd, Ps, Pe, Pi, Pf, Po).
bool is_punctuation(char32_t cp);

std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(const std::vector<char32_t>& cps);

std::size_t code_point_count(std::string_view s);

std::string strip_punctuation(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on Unicode white space; empty pieces are dropped.
std::vector<std::string> split_whitespace(std::string_view s);

// lowercase -> strip punctuation -> whitespace split.
std::vector<std::string> tokenize(std::string_view s);

std::string trim(std::string_view s);

} // namespace imagetalk::text
