#include "imagetalk/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace imagetalk::text {

bool is_punctuation(char32_t cp) {
    return u_ispunct(static_cast<UChar32>(cp)) != 0;
}

std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    const int32_t len = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < len) {
        UChar32 c;
        const int32_t start = i;
        U8_NEXT(p, i, len, c);
        if (c < 0) {
            out.push_back(U'�');
            i = start + 1;
        } else {
            out.push_back(static_cast<char32_t>(c));
        }
    }
    return out;
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        uint8_t buf[U8_MAX_LENGTH];
        int32_t n = 0;
        UBool err = false;
        U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(cp), err);
        if (err) {
            n = 0;
            U8_APPEND_UNSAFE(buf, n, 0xFFFD);
        }
        out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
    }
    return out;
}

std::size_t code_point_count(std::string_view s) {
    return decode_utf8(s).size();
}

std::string strip_punctuation(std::string_view s) {
    auto cps = decode_utf8(s);
    std::erase_if(cps, is_punctuation);
    return encode_utf8(cps);
}

std::string to_lower(std::string_view s) {
    auto cps = decode_utf8(s);
    for (auto& cp : cps) cp = static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
    return encode_utf8(cps);
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::vector<char32_t> cur;
    for (char32_t cp : decode_utf8(s)) {
        if (u_isUWhiteSpace(static_cast<UChar32>(cp))) {
            if (!cur.empty()) out.push_back(encode_utf8(cur));
            cur.clear();
        } else {
            cur.push_back(cp);
        }
    }
    if (!cur.empty()) out.push_back(encode_utf8(cur));
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    return split_whitespace(strip_punctuation(to_lower(s)));
}

std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

} // namespace imagetalk::text
