#pragma once
/**
 * @file
 * @brief Seed derivation. Every random stream in the pipeline is derived from
 *        one root seed as `derive_seed(root, stream_name, i, j, ...)`, which
 *        hashes the stream name (FNV-1a) and folds each index through SplitMix64.
 */

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace llmgrop
{
    using Rng = std::mt19937_64;

    inline constexpr std::uint64_t splitmix64 (std::uint64_t x) noexcept
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    inline constexpr std::uint64_t fnv1a (std::string_view s) noexcept
    {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (char c : s)
        {
            h ^= static_cast<unsigned char> (c);
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    inline constexpr std::uint64_t derive_seed (std::uint64_t root, std::string_view stream,
                                                std::initializer_list<std::uint64_t> indices = {}) noexcept
    {
        std::uint64_t s = splitmix64 (root ^ fnv1a (stream));
        for (std::uint64_t i : indices)
            s = splitmix64 (s ^ splitmix64 (i));
        return s;
    }

    inline Rng make_rng (std::uint64_t seed) { return Rng (splitmix64 (seed)); }
} // namespace llmgrop
