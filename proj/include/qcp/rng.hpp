#pragma once

#include <cstdint>
#include <limits>

namespace qcp {

/// SplitMix64 finalizer. Used both as the stream generator and as the
/// key-derivation hash for the counter-based scheme below.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive a stream key from a seed and up to three counters
/// (typically time step, phase, and an experiment-level tag).
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                   std::uint64_t c = 0) noexcept {
    std::uint64_t k = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
    k = splitmix64(k ^ a);
    k = splitmix64(k ^ (b * 0xd1342543de82ef95ULL));
    k = splitmix64(k ^ (c * 0xa0761d6478bd642fULL));
    return k;
}

/// Per-site key: one hash of the step key and the site index. The stride is
/// odd and unrelated to the SplitMix increment so site streams do not overlap.
constexpr std::uint64_t site_key(std::uint64_t step_key, std::uint64_t site) noexcept {
    return splitmix64(step_key + site * 0xe7037ed1a0b428dbULL);
}

constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based stream: the i-th draw is a pure function of (key, i), so a
/// stream can be recreated anywhere without shared state. Satisfies
/// UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

    constexpr result_type operator()() noexcept {
        return splitmix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
    }
    constexpr double uniform() noexcept { return to_unit((*this)()); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace qcp
