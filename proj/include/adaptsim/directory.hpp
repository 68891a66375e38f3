#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "adaptsim/bytes.hpp"
#include "adaptsim/frame.hpp"
#include "adaptsim/heuristics.hpp"
#include "adaptsim/ids.hpp"
#include "adaptsim/manet.hpp"

namespace adaptsim {

class DirectoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Replicated SE -> LP placement. Every LP holds a copy; copies change only at
/// step boundaries, by applying the same announcement set in SeId order.
class PlacementMap {
public:
    PlacementMap() = default;

    /// Entity i starts on LP (i mod numLps).
    static PlacementMap round_robin(std::uint64_t numSe, std::uint32_t numLps);

    LpId lookup(SeId se) const;

    std::uint64_t size() const { return owner_.size(); }
    std::uint32_t num_lps() const { return static_cast<std::uint32_t>(counts_.size()); }
    std::span<const std::uint32_t> counts() const { return counts_; }
    std::uint32_t count(LpId lp) const { return counts_.at(lp.value); }
    Timestep epoch() const { return epoch_; }

    /// Ownership guard for one step's announcements: every `from` must be the current
    /// owner, `to` must be a valid LP distinct from `from`, and no entity may appear twice.
    void validate(std::span<const MigrationIntent> announcements) const;

    /// Applies the announcements of step t in SeId order and sets epoch = t + 1.
    void apply_boundary_updates(std::span<const MigrationIntent> announcements, Timestep step);

    /// Order-sensitive hash of the full owner table (replica equality checks).
    std::uint64_t fingerprint() const;

    friend bool operator==(const PlacementMap&, const PlacementMap&) = default;

private:
    std::vector<LpId> owner_;
    std::vector<std::uint32_t> counts_;
    Timestep epoch_{1};
};

/// Everything that travels with a migrating entity.
struct SeTransfer {
    MobileHostState model;
    std::uint64_t inboxChain = 0;           // hash chain of delivered events
    std::optional<Timestep> lastMigration;
    SeCommStats stats;

    friend bool operator==(const SeTransfer&, const SeTransfer&) = default;
};

/// MIGRATE_DATA state layout: the 40-byte model 5-tuple, u64 inbox chain,
/// u64 last migration step (0 = never), then the statistics window.
Bytes encode_transfer(const SeTransfer& transfer);
SeTransfer decode_transfer(SeId se, std::span<const std::uint8_t> state);

struct AddressedFrame {
    LpId to;
    Frame frame;
};

/// Frames for one outbound migration: an announce to every peer and the state to the
/// target. Throws FrameEncodeError if the state cannot be framed.
std::vector<AddressedFrame> migrate_out(const MigrationIntent& intent, const SeTransfer& transfer, std::uint32_t numLps);

} // namespace adaptsim
