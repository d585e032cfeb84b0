#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace skrl {

// Counter-based generator: every variate is a pure function of (seed, counter),
// so parallel schedules cannot change what any run record sees.

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t golden64 = 0x9E3779B97F4A7C15ull;

inline std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t counter) {
    return mix64((seed + golden64) ^ mix64(counter * golden64 + 1));
}

// uniform in (0, 1]
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>((counter_bits(seed, counter) >> 11) + 1) * 0x1.0p-53;
}

// standard normal via Box-Muller, one variate per counter pair (2c, 2c+1)
inline double standard_normal(std::uint64_t seed, std::uint64_t counter) {
    double u1 = uniform01(seed, 2 * counter);
    double u2 = uniform01(seed, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return h;
}

// run r of experiment e under base_seed b
inline std::uint64_t hash64(std::uint64_t base_seed, std::string_view experiment, std::uint64_t r) {
    std::uint64_t x = mix64(base_seed ^ mix64(fnv1a(experiment)));
    return mix64(x ^ (r * golden64 + 0x632BE59BD9B4E019ull));
}

} // namespace skrl
