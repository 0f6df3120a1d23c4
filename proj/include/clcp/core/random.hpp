#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace clcp {

using Rng = std::mt19937_64;

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31U);
}

/// Derives an independent substream seed from a master seed and a path of
/// stream identifiers (user index, purpose tag, ...). The mapping is a pure
/// function so per-user generation does not depend on how many users exist.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master,
                                                  std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t state = splitmix64(master);
    for (const auto id : path) {
        state = splitmix64(state ^ splitmix64(id + 0x632BE59BD9B4E019ULL));
    }
    return state;
}

[[nodiscard]] inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(master, path));
}

[[nodiscard]] constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace clcp
