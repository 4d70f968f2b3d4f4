#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace synthba {

/// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine64(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(a ^ mix64(b + 0x632BE59BD9B4E019ULL));
}

/// FNV-1a over the bytes of a string, then mixed.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return mix64(h);
}

/// Seeded random stream. Substreams are derived from the seed alone, never
/// from the engine state, so a stage's draws do not depend on how many
/// numbers another stage consumed.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    RandomStream substream(std::string_view label) const {
        return RandomStream(combine64(seed_, hash_string(label)));
    }
    RandomStream substream(std::uint64_t index) const {
        return RandomStream(combine64(seed_, mix64(index)));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// U[lo, hi]; returns lo exactly when the interval is degenerate.
    double uniform(double lo, double hi) {
        if (!(hi > lo)) return lo;
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    /// N(mean, stddev); returns mean exactly when stddev is 0.
    double normal(double mean, double stddev) {
        if (!(stddev > 0.0)) return mean;
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return std::bernoulli_distribution(p)(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace synthba
