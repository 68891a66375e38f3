#include "adaptsim/directory.hpp"

#include <algorithm>
#include <sstream>

#include "adaptsim/rng.hpp"

namespace adaptsim {

PlacementMap PlacementMap::round_robin(std::uint64_t numSe, std::uint32_t numLps) {
    if (numLps == 0) {
        throw DirectoryError("placement needs at least one LP");
    }
    PlacementMap map;
    map.owner_.resize(numSe);
    map.counts_.assign(numLps, 0);
    for (std::uint64_t i = 0; i < numSe; ++i) {
        const auto lp = static_cast<std::uint32_t>(i % numLps);
        map.owner_[i] = LpId{lp};
        ++map.counts_[lp];
    }
    return map;
}

LpId PlacementMap::lookup(SeId se) const {
    if (se.value >= owner_.size()) {
        std::ostringstream msg;
        msg << "lookup of unknown entity " << se << " (directory holds " << owner_.size() << ")";
        throw DirectoryError(msg.str());
    }
    return owner_[se.value];
}

void PlacementMap::validate(std::span<const MigrationIntent> announcements) const {
    std::vector<SeId> seen;
    seen.reserve(announcements.size());
    for (const auto& a : announcements) {
        const LpId owner = lookup(a.se);
        std::ostringstream msg;
        if (owner != a.from) {
            msg << "migration of " << a.se << " announced by " << a.from << " but the owner is " << owner;
            throw DirectoryError(msg.str());
        }
        if (a.to.value >= counts_.size() || a.to == a.from) {
            msg << "migration of " << a.se << " has invalid target " << a.to;
            throw DirectoryError(msg.str());
        }
        seen.push_back(a.se);
    }
    std::sort(seen.begin(), seen.end());
    if (auto dup = std::adjacent_find(seen.begin(), seen.end()); dup != seen.end()) {
        std::ostringstream msg;
        msg << "entity " << *dup << " announced twice in one step";
        throw DirectoryError(msg.str());
    }
}

void PlacementMap::apply_boundary_updates(std::span<const MigrationIntent> announcements, Timestep step) {
    validate(announcements);
    std::vector<MigrationIntent> ordered(announcements.begin(), announcements.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.se < b.se; });
    for (const auto& a : ordered) {
        owner_[a.se.value] = a.to;
        --counts_[a.from.value];
        ++counts_[a.to.value];
    }
    epoch_ = Timestep{step.value + 1};
}

std::uint64_t PlacementMap::fingerprint() const {
    std::uint64_t h = splitmix_fold(0, owner_.size());
    h = splitmix_fold(h, epoch_.value);
    for (const auto& lp : owner_) {
        h = splitmix_fold(h, lp.value);
    }
    return h;
}

Bytes encode_transfer(const SeTransfer& transfer) {
    Bytes out;
    out.reserve(kMobileHostStateBytes + 24 + transfer.stats.window() * (8 + 4 * transfer.stats.num_lps()));
    ByteWriter w(out);
    write_state(transfer.model, w);
    w.u64(transfer.inboxChain);
    w.u64(transfer.lastMigration ? transfer.lastMigration->value : 0);
    transfer.stats.encode(w);
    return out;
}

SeTransfer decode_transfer(SeId se, std::span<const std::uint8_t> state) {
    ByteReader r(state);
    SeTransfer t;
    t.model = read_state(se, r);
    t.inboxChain = r.u64();
    if (const auto last = r.u64(); last != 0) {
        t.lastMigration = Timestep{last};
    }
    t.stats = SeCommStats::decode(r);
    if (r.remaining() != 0) {
        throw ShortRead("trailing bytes after migrated state");
    }
    return t;
}

std::vector<AddressedFrame> migrate_out(const MigrationIntent& intent, const SeTransfer& transfer, std::uint32_t numLps) {
    MigrateDataBody data{intent.decidedAt, intent.se, encode_transfer(transfer)};
    if (data.state.size() > kMaxFrameLength - 21) {
        throw FrameEncodeError("migrated state of " + std::to_string(data.state.size()) + " bytes does not fit a frame");
    }
    std::vector<AddressedFrame> out;
    for (std::uint32_t lp = 0; lp < numLps; ++lp) {
        if (lp != intent.from.value) {
            out.push_back({LpId{lp}, MigrateAnnounceBody{intent.decidedAt, intent.se, intent.from, intent.to}});
        }
    }
    out.push_back({intent.to, std::move(data)});
    return out;
}

} // namespace adaptsim
