#pragma once

#include <cstdint>
#include <random>

namespace otd {

/// splitmix64 finalizer; also used to derive stream seeds and Zobrist keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/**
 * Seedable 64-bit generator: std::mt19937_64 seeded through splitmix64.
 *
 * Streams: Rng::stream(seed, k) gives the k-th independent stream of a seed,
 * so workers and evaluation episodes never share state. Bounded draws use a
 * multiply-high reduction instead of std::uniform_int_distribution, whose
 * output differs between standard libraries. Both choices are part of the
 * reproducibility contract and must not change.
 */
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix64(seed) ^ splitmix64(~index));
    }

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    result_type operator()() { return engine_(); }

    /// Uniform integer in [0, n); n must be > 0.
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(((engine_() >> 32) * n) >> 32);
    }

    /// Uniform in [0, n) for 64-bit ranges (reservoir indices).
    std::uint64_t below64(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

} // namespace otd
