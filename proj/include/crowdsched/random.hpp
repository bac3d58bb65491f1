#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>

namespace crowdsched {

/// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr auto mix_seed(std::uint64_t x) noexcept -> std::uint64_t
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

constexpr auto derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept -> std::uint64_t
{
    return mix_seed(mix_seed(mix_seed(master) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

/// Seeded generator whose draws are identical across standard libraries.
/// The std distributions are implementation-defined, so the mapping from
/// engine output to numbers is done here.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    auto operator()() -> result_type { return engine_(); }
    static constexpr auto min() -> result_type { return std::mt19937_64::min(); }
    static constexpr auto max() -> result_type { return std::mt19937_64::max(); }

    /// Uniform in [0, 1).
    auto uniform() -> double { return static_cast<double>(engine_() >> 11U) * 0x1.0p-53; }

    auto uniform(double lo, double hi) -> double { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], rejection sampled.
    auto uniform_int(std::int64_t lo, std::int64_t hi) -> std::int64_t
    {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1U;
        if (span == 0) { // full 64-bit range
            return static_cast<std::int64_t>(engine_());
        }
        const std::uint64_t limit = max() - (max() % span);
        std::uint64_t draw = engine_();
        while (draw >= limit) {
            draw = engine_();
        }
        return lo + static_cast<std::int64_t>(draw % span);
    }

    auto index(std::size_t n) -> std::size_t
    {
        return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }

    auto bernoulli(double p) -> bool { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

/// Fisher-Yates with the portable index draw.
template <typename It>
void shuffle(It first, It last, Rng& rng)
{
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = rng.index(i);
        std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1), first + static_cast<std::ptrdiff_t>(j));
    }
}

} // namespace crowdsched
