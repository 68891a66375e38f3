#pragma once

#include <cstdint>

#include "adaptsim/ids.hpp"

namespace adaptsim {

struct SplitMixStep {
    std::uint64_t state;
    std::uint64_t output;
};

/// One SplitMix64 round. Bit-exact with the reference generator.
constexpr SplitMixStep splitmix_next(std::uint64_t state) noexcept {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return {state, z ^ (z >> 31)};
}

/// Folds one 64-bit word into a running hash with a single SplitMix64 round.
constexpr std::uint64_t splitmix_fold(std::uint64_t hash, std::uint64_t word) noexcept {
    return splitmix_next(hash ^ word).output;
}

enum class StreamPurpose : std::uint8_t {
    Mobility = 1,
    Waypoint = 2,
    BroadcastLottery = 3,
};

/// Sequential SplitMix64 generator. Cheap to copy; each copy continues independently.
class RngStream {
public:
    constexpr explicit RngStream(std::uint64_t state) noexcept : state_(state) {}

    constexpr std::uint64_t next() noexcept {
        auto step = splitmix_next(state_);
        state_ = step.state;
        return step.output;
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    constexpr double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    constexpr std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// Stream keyed by (globalSeed, se, purpose, step). Each field is folded in with one
/// SplitMix64 round, starting from zero, in that order.
constexpr RngStream derive_stream(std::uint64_t globalSeed, SeId se, StreamPurpose purpose, Timestep step) noexcept {
    std::uint64_t h = 0;
    h = splitmix_fold(h, globalSeed);
    h = splitmix_fold(h, se.value);
    h = splitmix_fold(h, static_cast<std::uint64_t>(purpose));
    h = splitmix_fold(h, step.value);
    return RngStream{h};
}

} // namespace adaptsim
