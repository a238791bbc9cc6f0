#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace leukex {

/// Portable seeded random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Its seed is SplitMix64(seed) combined with SplitMix64(stream), so
/// independent sub-streams can be derived for (seed, sample index) pairs.
/// All derived draws use explicit arithmetic rather than std distributions,
/// whose algorithms differ between standard library implementations:
///
///   uniform()    = (next_u64() >> 11) * 2^-53, in [0, 1)
///   below(n)     = rejection sampling on next_u64() against 2^64 mod n
///   bernoulli(p) = uniform() < p
///   shuffle      = Fisher-Yates from the back, swapping i with below(i + 1)
class RandomStream {
public:
    static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64";

    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

    /// Independent stream for a (seed, index) pair.
    static RandomStream substream(std::uint64_t seed, std::uint64_t index) {
        return RandomStream(seed, index);
    }

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi);
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace leukex
