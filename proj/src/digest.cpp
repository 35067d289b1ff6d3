#include "imagetalk/digest.hpp"

#include "imagetalk/errors.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <vector>

namespace imagetalk {

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (unsigned char b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0x0f]);
    }
    return out;
}

std::string base64_encode(std::string_view data) {
    std::vector<unsigned char> out(4 * ((data.size() + 2) / 3) + 1);
    const int n = EVP_EncodeBlock(out.data(), reinterpret_cast<const unsigned char*>(data.data()),
                                  static_cast<int>(data.size()));
    return std::string(reinterpret_cast<const char*>(out.data()), static_cast<std::size_t>(n));
}

std::string base64_decode(std::string_view encoded) {
    if (encoded.size() % 4 != 0) {
        throw Error(ErrorCode::invalid_argument, "base64 payload length is not a multiple of 4");
    }
    if (encoded.empty()) return {};
    std::vector<unsigned char> out(3 * encoded.size() / 4 + 1);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(encoded.data()),
                                  static_cast<int>(encoded.size()));
    if (n < 0) throw Error(ErrorCode::invalid_argument, "malformed base64 payload");
    // EVP_DecodeBlock does not account for '=' padding.
    std::size_t len = static_cast<std::size_t>(n);
    if (encoded.back() == '=') --len;
    if (encoded.size() >= 2 && encoded[encoded.size() - 2] == '=') --len;
    return std::string(reinterpret_cast<const char*>(out.data()), len);
}

} // namespace imagetalk
