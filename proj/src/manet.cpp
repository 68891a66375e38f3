#include "adaptsim/manet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adaptsim/rng.hpp"

namespace adaptsim {

void ModelConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (numMh == 0) fail("model.num_mh must be positive");
    if (!(arena.width > 0) || !(arena.height > 0)) fail("model.arena_w and model.arena_h must be positive");
    if (!(radius > 0)) fail("model.radius must be positive");
    if (!(broadcastFraction > 0 && broadcastFraction <= 1)) fail("model.fraction must be in (0, 1]");
    if (!(speedMin > 0) || !(speedMax >= speedMin)) fail("model.speed_min/speed_max must satisfy 0 < min <= max");
    if (!(waypointArrivalEps > 0)) fail("model.waypoint_eps must be positive");
}

namespace {

void draw_leg(MobileHostState& s, RngStream& rng, const ModelConfig& config) {
    s.waypoint.x = rng.uniform01() * config.arena.width;
    s.waypoint.y = rng.uniform01() * config.arena.height;
    s.speed = rng.uniform(config.speedMin, config.speedMax);
}

} // namespace

MobileHostState initial_state(SeId id, const ModelConfig& config, std::uint64_t globalSeed) {
    auto rng = derive_stream(globalSeed, id, StreamPurpose::Mobility, Timestep{0});
    MobileHostState s;
    s.id = id;
    s.pos.x = rng.uniform01() * config.arena.width;
    s.pos.y = rng.uniform01() * config.arena.height;
    draw_leg(s, rng, config);
    return s;
}

MobileHostState rwp_step(const MobileHostState& state, Timestep step, std::uint64_t globalSeed, const ModelConfig& config) {
    MobileHostState next = state;
    const double dx = detail::axis_signed(state.pos.x, state.waypoint.x, config.arena.width);
    const double dy = detail::axis_signed(state.pos.y, state.waypoint.y, config.arena.height);
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist <= std::max(state.speed, config.waypointArrivalEps)) {
        next.pos = state.waypoint;
        auto rng = derive_stream(globalSeed, state.id, StreamPurpose::Waypoint, step);
        draw_leg(next, rng, config);
    } else {
        const double f = state.speed / dist;
        next.pos = wrap(Position{state.pos.x + dx * f, state.pos.y + dy * f}, config.arena);
    }
    return next;
}

bool is_broadcaster(SeId id, Timestep step, std::uint64_t globalSeed, double fraction) {
    const double scaled = fraction * 0x1.0p64;
    if (scaled >= 0x1.0p64) {
        return true;
    }
    const auto threshold = static_cast<std::uint64_t>(scaled);
    return derive_stream(globalSeed, id, StreamPurpose::BroadcastLottery, step).next() < threshold;
}

std::vector<SeId> choose_broadcasters(std::uint64_t numMh, double fraction, Timestep step, std::uint64_t globalSeed) {
    std::vector<SeId> out;
    for (std::uint64_t i = 0; i < numMh; ++i) {
        if (is_broadcaster(SeId{i}, step, globalSeed, fraction)) {
            out.push_back(SeId{i});
        }
    }
    return out;
}

void write_state(const MobileHostState& state, ByteWriter& w) {
    w.f64(state.pos.x);
    w.f64(state.pos.y);
    w.f64(state.waypoint.x);
    w.f64(state.waypoint.y);
    w.f64(state.speed);
}

MobileHostState read_state(SeId id, ByteReader& r) {
    MobileHostState s;
    s.id = id;
    s.pos.x = r.f64();
    s.pos.y = r.f64();
    s.waypoint.x = r.f64();
    s.waypoint.y = r.f64();
    s.speed = r.f64();
    return s;
}

Bytes encode_ping(Position senderPos) {
    Bytes out;
    out.reserve(16);
    ByteWriter w(out);
    w.f64(senderPos.x);
    w.f64(senderPos.y);
    return out;
}

Position decode_ping(std::span<const std::uint8_t> payload) {
    if (payload.size() != 16) {
        throw ModelError("ping payload must be 16 bytes, got " + std::to_string(payload.size()));
    }
    ByteReader r(payload);
    Position p;
    p.x = r.f64();
    p.y = r.f64();
    return p;
}

std::vector<LpId> wire_fanout(LpId sender, std::span<const std::uint32_t> lpSeCounts) {
    std::vector<LpId> out;
    for (std::uint32_t lp = 0; lp < lpSeCounts.size(); ++lp) {
        if (lp != sender.value && lpSeCounts[lp] > 0) {
            out.push_back(LpId{lp});
        }
    }
    return out;
}

NeighborGrid::NeighborGrid(Arena arena, double radius)
    : arena_(arena),
      radius_(radius),
      cellsX_(static_cast<std::uint32_t>(std::max(1.0, std::floor(arena.width / radius)))),
      cellsY_(static_cast<std::uint32_t>(std::max(1.0, std::floor(arena.height / radius)))) {
    start_.assign(std::size_t{cellsX_} * cellsY_ + 1, 0);
}

std::uint32_t NeighborGrid::cell_x(double x) const {
    const auto c = static_cast<std::uint32_t>(x / arena_.width * cellsX_);
    return std::min(c, cellsX_ - 1);
}

std::uint32_t NeighborGrid::cell_y(double y) const {
    const auto c = static_cast<std::uint32_t>(y / arena_.height * cellsY_);
    return std::min(c, cellsY_ - 1);
}

int NeighborGrid::neighbors(std::uint32_t c, std::uint32_t n, std::uint32_t out[3]) {
    if (n == 1) {
        out[0] = 0;
        return 1;
    }
    if (n == 2) {
        out[0] = 0;
        out[1] = 1;
        return 2;
    }
    out[0] = (c + n - 1) % n;
    out[1] = c;
    out[2] = (c + 1) % n;
    return 3;
}

void NeighborGrid::rebuild(std::span<const SeId> ids, std::span<const Position> positions) {
    ids_.assign(ids.begin(), ids.end());
    positions_.assign(positions.begin(), positions.end());
    std::fill(start_.begin(), start_.end(), 0);
    std::vector<std::uint32_t> cellOf(ids_.size());
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        cellOf[i] = cell_y(positions_[i].y) * cellsX_ + cell_x(positions_[i].x);
        ++start_[cellOf[i] + 1];
    }
    for (std::size_t c = 1; c < start_.size(); ++c) {
        start_[c] += start_[c - 1];
    }
    order_.resize(ids_.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        order_[fill[cellOf[i]]++] = static_cast<std::uint32_t>(i);
    }
}

} // namespace adaptsim
