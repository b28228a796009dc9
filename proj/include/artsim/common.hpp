#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace artsim {

// FNV-1a over arbitrary bytes. Used for file checksums and config fingerprints.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(uint64_t value);

// 17 significant digits; round-trips any IEEE double exactly.
std::string format_double(double v);

// splitmix64 finalizer; decorrelates seeds derived from a common master seed.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derive an independent stream seed from a master seed and a purpose tag.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
    return splitmix64(seed ^ fnv1a64(tag));
}

}  // namespace artsim
