#include "leukex/random_stream.hpp"

#include "leukex/error.hpp"

namespace leukex {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed) ^ splitmix64(~stream)) {}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
    return lo + uniform() * (hi - lo);
}

std::uint64_t RandomStream::below(std::uint64_t n) {
    if (n == 0) {
        throw ArgumentError("RandomStream::below requires n > 0");
    }
    // Values below `threshold` would bias the modulo; 2^64 mod n == (-n) mod n.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x >= threshold) {
            return x % n;
        }
    }
}

}  // namespace leukex
