#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace styletuner {

// 64-bit FNV-1a. Used for stream derivation, mock dispatch, and content hashes.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view s);

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic random stream. All distribution code is local to this class so
// draws are reproducible across standard library implementations. Independent
// streams are derived from (seed, label) pairs; consuming one stream never
// advances another.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed);
    RandomSource(std::uint64_t seed, std::string_view stream);

    std::uint64_t next_u64();
    // Unbiased draw in [0, n), n >= 1.
    std::uint64_t next_below(std::uint64_t n);
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Standard normal via Box-Muller; caches the spare value.
    double normal();
    void fill_normal(std::span<double> out);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace styletuner
