#pragma once

// Portable random streams.
//
// std::mt19937_64 is bit-specified by the standard; the distributions built on
// top of it are not, so the uniform, integer and normal draws used by the
// toolkit are implemented here on the raw 64-bit output.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace grounder {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// FNV-1a, used to fold string identifiers into stream keys.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Combines stream key components; order matters.
constexpr std::uint64_t stream_key(std::uint64_t seed) noexcept { return splitmix64(seed); }

template <typename... Rest>
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t next, Rest... rest) noexcept {
    return stream_key(splitmix64(seed) ^ (next + 0x632BE59BD9B4E019ULL), rest...);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] (inclusive).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        __extension__ using u128 = unsigned __int128;
        const auto span = static_cast<u128>(static_cast<std::uint64_t>(hi - lo) + 1);
        const auto scaled = (static_cast<u128>(next_u64()) * span) >> 64;
        return lo + static_cast<std::int64_t>(scaled);
    }

    /// Standard normal via Box-Muller; one draw per call, no cached pair.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace grounder
