#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>

namespace cevo {

/// Anything that can feed the stochastic operators: uniform reals in [0, 1)
/// and uniform indices in [0, n).
template <typename R>
concept RandomStream = requires(R& r, std::size_t n) {
    { r.uniform() } -> std::convertible_to<double>;
    { r.index(n) } -> std::convertible_to<std::size_t>;
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return unit_(engine_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }

    std::size_t index(std::size_t n)
    {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for run `run` of cell `cell`; a pure function of its arguments.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t run)
{
    return mix64(mix64(mix64(master) ^ cell) ^ (run * 0xd1b54a32d192ed03ULL));
}

} // namespace cevo
