#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace leafpipe {

// FNV-1a 64-bit, used for config digests and replay sidecar checksums.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t hash = 0xCBF29CE484222325ULL) {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

inline std::string to_hex(uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

inline std::string digest_hex(std::string_view bytes) { return to_hex(fnv1a64(bytes)); }

}  // namespace leafpipe
