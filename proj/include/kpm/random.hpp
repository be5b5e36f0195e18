#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace kpm {

/// Engine keyed by a tuple of integers, so each (seed, stream, step) gets an
/// independent stream regardless of the order in which streams are created.
inline std::mt19937_64 keyed_engine(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * key.size());
    for (std::uint64_t k : key) {
        words.push_back(static_cast<std::uint32_t>(k));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace kpm
