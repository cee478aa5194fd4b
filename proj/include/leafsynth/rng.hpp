#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "leafsynth/geometry.hpp"

namespace leafsynth {

// All randomness is counter based: a value is a pure function of
// (seed, purpose tag, coordinates/counter), so results never depend on
// evaluation order or thread scheduling.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t tag_hash(std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ull; // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

inline constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ull));
}

template <class... Rest>
inline constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b, Rest... rest) {
    return mix(mix(a, b), static_cast<std::uint64_t>(rest)...);
}

// 53-bit uniform in [0, 1).
inline constexpr double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

struct NoiseSeed {
    std::uint64_t value = 0;

    NoiseSeed child(std::string_view tag) const { return {mix(value, tag_hash(tag))}; }
    NoiseSeed child(std::string_view tag, std::uint64_t index) const {
        return {mix(value, tag_hash(tag), index)};
    }
    constexpr bool operator==(const NoiseSeed&) const = default;
};

// Sequential draws from a keyed counter stream.
class RandomStream {
public:
    explicit RandomStream(NoiseSeed seed) : key_(seed.value) {}
    RandomStream(NoiseSeed seed, std::string_view tag) : key_(seed.child(tag).value) {}

    std::uint64_t next_u64() { return mix(key_, counter_++); }
    double uniform() { return to_unit(next_u64()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1u;
        return lo + static_cast<std::int64_t>(uniform() * static_cast<double>(span));
    }

    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
    }

    // Knuth's product method for small means, normal approximation beyond.
    std::int64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 60.0) {
            const double v = std::round(mean + std::sqrt(mean) * normal());
            return v < 0.0 ? 0 : static_cast<std::int64_t>(v);
        }
        const double limit = std::exp(-mean);
        double product = uniform();
        std::int64_t k = 0;
        while (product > limit) {
            ++k;
            product *= uniform();
        }
        return k;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace leafsynth
