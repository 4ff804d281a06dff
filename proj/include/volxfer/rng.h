#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace volxfer {

// 64-bit FNV-1a; pass the previous result as `h` to hash in pieces.
std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL);

// Seed of a named sub-stream of the root seed. Streams are independent of one
// another, so adding a consumer never shifts another consumer's draws.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

inline std::mt19937_64 make_engine(std::uint64_t root, std::string_view stream) {
    return std::mt19937_64(derive_seed(root, stream));
}

}  // namespace volxfer
