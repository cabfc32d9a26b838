#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace hgml {

// 128 bits from the operating system's entropy source, hex encoded.
inline std::string random_token() {
    static thread_local std::random_device device;
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (int word = 0; word < 4; ++word) {
        std::uint32_t bits = device();
        for (int k = 0; k < 8; ++k) {
            out.push_back(digits[bits & 0xf]);
            bits >>= 4;
        }
    }
    return out;
}

// Runtime depends only on the lengths, never on where the inputs differ.
inline bool constant_time_equal(std::string_view a, std::string_view b) {
    unsigned char diff = a.size() == b.size() ? 0 : 1;
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    for (std::size_t i = 0; i < n; ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
    return diff == 0;
}

}  // namespace hgml
