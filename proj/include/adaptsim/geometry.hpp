#pragma once

#include <cmath>

namespace adaptsim {

struct Position {
    double x = 0.0;
    double y = 0.0;

    friend constexpr bool operator==(const Position&, const Position&) = default;
};

/// Rectangular arena with periodic boundaries on both axes.
struct Arena {
    double width = 10000.0;
    double height = 10000.0;
};

struct Delta {
    double dx;
    double dy;
};

namespace detail {

inline double axis_distance(double a, double b, double extent) {
    const double d = std::fabs(a - b);
    return d <= extent - d ? d : extent - d;
}

/// Shortest signed displacement from a to b on a ring of the given extent.
inline double axis_signed(double a, double b, double extent) {
    double d = b - a;
    if (d > extent / 2) {
        d -= extent;
    } else if (d < -extent / 2) {
        d += extent;
    }
    return d;
}

inline double wrap_axis(double v, double extent) {
    v = std::fmod(v, extent);
    if (v < 0) {
        v += extent;
    }
    if (v >= extent) {
        v -= extent;
    }
    return v;
}

} // namespace detail

/// Per-axis torus distance; each component lies in [0, extent/2].
inline Delta torus_delta(Position a, Position b, Arena arena) {
    return {detail::axis_distance(a.x, b.x, arena.width), detail::axis_distance(a.y, b.y, arena.height)};
}

/// Inclusive range test on squared torus distance.
inline bool in_range(Position a, Position b, double radius, Arena arena) {
    const auto [dx, dy] = torus_delta(a, b, arena);
    return dx * dx + dy * dy <= radius * radius;
}

inline Position wrap(Position p, Arena arena) {
    return {detail::wrap_axis(p.x, arena.width), detail::wrap_axis(p.y, arena.height)};
}

inline bool inside(Position p, Arena arena) {
    return p.x >= 0 && p.x < arena.width && p.y >= 0 && p.y < arena.height;
}

} // namespace adaptsim
