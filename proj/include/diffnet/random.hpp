#pragma once

#include <cstdint>
#include <random>

namespace diffnet {

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Seed for stream `stream` under root seed `root`.
 *
 * Every replicate, chain or job takes its own stream id, so its draws do not
 * depend on scheduling order. Nesting (derive_seed(derive_seed(r, a), b)) is
 * the documented way to build hierarchical streams.
 */
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream)
{
    return mix64(mix64(root) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the polar method; no cached second variate.
    double normal();

    /// Uniform integer on {0, ..., n-1} by rejection.
    std::uint64_t index(std::uint64_t n);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace diffnet
