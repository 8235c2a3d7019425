#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace aepl {

using Rng = std::mt19937_64;

/// Derives an independent generator from a base seed and any number of stream tags
/// (round number, purpose tag, ...). Same inputs always give the same stream.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> streams = {}) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    for (auto s : streams) {
        words.push_back(static_cast<std::uint32_t>(s));
        words.push_back(static_cast<std::uint32_t>(s >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// Stream tags so that different consumers of one seed never share a sequence.
namespace stream {
inline constexpr std::uint64_t kSynthetic = 0x5359;
inline constexpr std::uint64_t kHeadInit = 0x4844;
inline constexpr std::uint64_t kShuffle = 0x5348;
inline constexpr std::uint64_t kKMeans = 0x4b4d;
inline constexpr std::uint64_t kRandom = 0x524e;
inline constexpr std::uint64_t kBadge = 0x4247;
}  // namespace stream

}  // namespace aepl

namespace aepl {

/// A fresh 64-bit seed for (seed, tag, round); used to hand per-round seeds to sub-algorithms.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t round) {
    return make_rng(seed, {tag, round})();
}

}  // namespace aepl
