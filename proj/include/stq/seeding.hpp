#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace stq {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a hash of a stream name, so command names can serve as path keys.
constexpr std::uint64_t stream_key(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : name) {
        h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    }
    return h;
}

/// Split rule: every random stream is identified by a path below the root
/// seed, e.g. {command, sequence index, stream index}. The child seed is
/// folded one key at a time, so distinct paths give independent streams and
/// the value never depends on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(root);
    for (const auto key : path) {
        h = splitmix64(h ^ splitmix64(key));
    }
    return h;
}

}  // namespace stq
