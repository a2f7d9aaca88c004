#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace clgr {

// Error taxonomy mirrored by CLI exit codes: ConfigError -> 2, DataError -> 3,
// anything else -> 4.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kPi = 3.14159265358979323846;

inline double clamp(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

inline double wrap_angle(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

// FNV-1a, used wherever a stable hash of raw bytes is needed.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t seed) {
    return fnv1a(&v, sizeof(v), seed);
}

inline std::uint64_t fnv1a_f64(double v, std::uint64_t seed) {
    // +0.0 and -0.0 hash alike; infinities keep their bit patterns.
    if (v == 0.0) v = 0.0;
    return fnv1a(&v, sizeof(v), seed);
}

}  // namespace clgr
