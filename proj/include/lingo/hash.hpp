#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lingo {

// FNV-1a, 64-bit. Used for content hashing of artifacts and cache keys.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v);

inline std::string content_hash(std::string_view data) { return hex64(fnv1a64(data)); }

// splitmix64: derives independent sub-seeds from the single run seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose) {
    std::uint64_t s = root ^ fnv1a64(purpose);
    return splitmix64(s);
}

}  // namespace lingo
