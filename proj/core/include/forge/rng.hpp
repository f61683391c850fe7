#pragma once

#include <cstdint>
#include <string_view>

namespace forge {

// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
constexpr uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Counter-based keyed PRNG. Each (seed, key) pair owns an independent
// stream, so per-item draws are reproducible regardless of processing order.
class KeyedRng {
public:
    explicit KeyedRng(uint64_t seed) : state_(splitmix64(seed)) {}
    KeyedRng(uint64_t seed, std::string_view key)
        : state_(splitmix64(splitmix64(seed) ^ fnv1a64(key))) {}

    uint64_t next_u64() { return splitmix64(state_ ^ counter_++); }

    // Uniform in [0, n). Modulo bias is negligible for n << 2^64.
    uint64_t next_index(uint64_t n) { return next_u64() % n; }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool next_bool(double p = 0.5) { return next_double() < p; }

private:
    uint64_t state_;
    uint64_t counter_ = 0;
};

} // namespace forge
