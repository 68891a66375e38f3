#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>

namespace adaptsim {

/// Globally unique simulated-entity identifier, dense in [0, N).
struct SeId {
    std::uint64_t value = 0;

    constexpr SeId() = default;
    constexpr explicit SeId(std::uint64_t v) : value(v) {}
    constexpr auto operator<=>(const SeId&) const = default;
};

/// Logical-process identifier, dense in [0, numLps).
struct LpId {
    std::uint32_t value = 0;

    constexpr LpId() = default;
    constexpr explicit LpId(std::uint32_t v) : value(v) {}
    constexpr auto operator<=>(const LpId&) const = default;
};

/// One fixed-size simulated step. Runs use steps 1..S.
struct Timestep {
    std::uint64_t value = 0;

    constexpr Timestep() = default;
    constexpr explicit Timestep(std::uint64_t v) : value(v) {}
    constexpr auto operator<=>(const Timestep&) const = default;
};

/// Destination sentinel for broadcast events.
inline constexpr SeId kBroadcast{std::numeric_limits<std::uint64_t>::max()};

inline std::ostream& operator<<(std::ostream& os, SeId id) { return os << "se" << id.value; }
inline std::ostream& operator<<(std::ostream& os, LpId id) { return os << "lp" << id.value; }
inline std::ostream& operator<<(std::ostream& os, Timestep t) { return os << "t" << t.value; }

} // namespace adaptsim

template <>
struct std::hash<adaptsim::SeId> {
    std::size_t operator()(adaptsim::SeId id) const noexcept { return std::hash<std::uint64_t>{}(id.value); }
};
