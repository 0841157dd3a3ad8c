#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uqeval::rng {

// Keyed deterministic random streams. Every random draw in the library goes
// through Stream so results are identical across platforms and independent of
// scheduling: parallel stages key their streams by (seed, tag, index) instead
// of sharing one generator.

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::uint64_t derive(std::uint64_t seed, std::string_view tag) {
    return splitmix64(seed ^ splitmix64(fnv1a(tag)));
}

inline std::uint64_t derive(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    return splitmix64(derive(seed, tag) ^ splitmix64(index));
}

class Stream {
public:
    explicit Stream(std::uint64_t key) : eng_(key) {}

    std::uint64_t next() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // Uniform in [0, n); multiply-shift reduction, deterministic.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(bounded(static_cast<std::uint64_t>(hi - lo) + 1));
    }

private:
    std::mt19937_64 eng_;
};

} // namespace uqeval::rng
