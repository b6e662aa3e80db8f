#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace qcd {

/// SplitMix64 finalizer. Used to turn (seed_base, replication) into a
/// well-mixed 64-bit trial key.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Key of replication `index` within a run seeded by `seed_base`. Any
/// trial can be replayed from this key alone.
constexpr std::uint64_t derive_trial_seed(std::uint64_t seed_base, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed_base) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator (Philox4x32-10). The stream is a pure function
/// of the 64-bit key and the block counter, so there is no hidden state
/// beyond the position within the stream.
class Rng {
public:
    using result_type = std::uint32_t;

    explicit Rng(std::uint64_t key) noexcept
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (lane_ == 4) refill();
        return block_[lane_++];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [0, n). Lemire's multiply-shift with rejection.
    std::uint32_t uniform_index(std::uint32_t n) noexcept {
        std::uint64_t m = static_cast<std::uint64_t>((*this)()) * n;
        auto low = static_cast<std::uint32_t>(m);
        if (low < n) {
            const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
            while (low < threshold) {
                m = static_cast<std::uint64_t>((*this)()) * n;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept;

    std::uint64_t key() const noexcept {
        return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32);
    }

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> block_{};
    int lane_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace qcd
