#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "adaptsim/bytes.hpp"
#include "adaptsim/geometry.hpp"
#include "adaptsim/ids.hpp"

namespace adaptsim {

struct ModelConfig {
    std::uint64_t numMh = 3000;
    Arena arena{10000.0, 10000.0};
    double radius = 250.0;
    double broadcastFraction = 0.2;
    std::uint64_t steps = 500;
    double speedMin = 1.0;
    double speedMax = 5.0;
    double waypointArrivalEps = 1.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Random-waypoint mobile host. The migratable model state.
struct MobileHostState {
    SeId id;
    Position pos;
    Position waypoint;
    double speed = 0.0;

    friend bool operator==(const MobileHostState&, const MobileHostState&) = default;
};

/// Serialized form: pos.x, pos.y, waypoint.x, waypoint.y, speed as big-endian binary64.
inline constexpr std::size_t kMobileHostStateBytes = 40;

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bootstrap state drawn from the entity's MOBILITY stream at step 0.
MobileHostState initial_state(SeId id, const ModelConfig& config, std::uint64_t globalSeed);

/// One random-waypoint move. 100% of hosts move every step; a host within
/// max(speed, eps) of its waypoint lands on it and draws a new leg from its
/// WAYPOINT stream for this step.
MobileHostState rwp_step(const MobileHostState& state, Timestep step, std::uint64_t globalSeed, const ModelConfig& config);

/// Per-entity lottery: first draw of the BROADCAST_LOTTERY stream below fraction * 2^64.
bool is_broadcaster(SeId id, Timestep step, std::uint64_t globalSeed, double fraction);

std::vector<SeId> choose_broadcasters(std::uint64_t numMh, double fraction, Timestep step, std::uint64_t globalSeed);

void write_state(const MobileHostState& state, ByteWriter& w);
/// Reads the 5-tuple; the id is supplied by the caller (it travels in the frame header).
MobileHostState read_state(SeId id, ByteReader& r);

/// Ping payload: sender position as two big-endian binary64.
Bytes encode_ping(Position senderPos);
/// Throws ModelError on a payload that is not exactly 16 bytes.
Position decode_ping(std::span<const std::uint8_t> payload);

/// Remote LPs that host at least one entity: the wire fanout of one broadcast.
std::vector<LpId> wire_fanout(LpId sender, std::span<const std::uint32_t> lpSeCounts);

/// Uniform bucket grid over the torus with cells no smaller than the radius, so every
/// in-range receiver of a point lies in the surrounding 3x3 block of cells.
class NeighborGrid {
public:
    NeighborGrid(Arena arena, double radius);

    /// Rebuilds from parallel arrays of ids and positions.
    void rebuild(std::span<const SeId> ids, std::span<const Position> positions);

    /// Calls fn(index) for every indexed entity within `radius` of `center`
    /// (inclusive), skipping `exclude`. Indices refer to the arrays given to rebuild().
    template <class Fn>
    void for_each_in_range(Position center, SeId exclude, Fn&& fn) const {
        const auto cx = cell_x(center.x);
        const auto cy = cell_y(center.y);
        std::uint32_t xs[3], ys[3];
        const int nx = neighbors(cx, cellsX_, xs);
        const int ny = neighbors(cy, cellsY_, ys);
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const std::uint32_t cell = ys[j] * cellsX_ + xs[i];
                for (std::uint32_t k = start_[cell]; k < start_[cell + 1]; ++k) {
                    const std::uint32_t idx = order_[k];
                    if (ids_[idx] != exclude && in_range(center, positions_[idx], radius_, arena_)) {
                        fn(idx);
                    }
                }
            }
        }
    }

private:
    std::uint32_t cell_x(double x) const;
    std::uint32_t cell_y(double y) const;
    static int neighbors(std::uint32_t c, std::uint32_t n, std::uint32_t out[3]);

    Arena arena_;
    double radius_;
    std::uint32_t cellsX_;
    std::uint32_t cellsY_;
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> order_;
    std::vector<SeId> ids_;
    std::vector<Position> positions_;
};

} // namespace adaptsim
