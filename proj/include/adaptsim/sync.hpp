#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptsim/directory.hpp"
#include "adaptsim/frame.hpp"
#include "adaptsim/heuristics.hpp"
#include "adaptsim/ids.hpp"
#include "adaptsim/manet.hpp"
#include "adaptsim/net_profile.hpp"

namespace adaptsim {

class SyncError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An event together with the LP it arrived from (the sender's owner when it was emitted).
struct InboundEvent {
    EventBody body;
    LpId source;
};

/// Sorts by (sender, seq). Throws SyncError on a duplicate pair.
void canonical_order(std::vector<InboundEvent>& events);

/// Hash of one entity: seId, its serialized model state and its delivery chain.
std::uint64_t se_digest(const MobileHostState& state, std::uint64_t inboxChain);

/// XOR of se_digest over a set of entities; combine partials across LPs with XOR.
std::uint64_t step_digest(std::span<const MobileHostState> states, std::span<const std::uint64_t> chains);

/// Folds one delivered event into the receiver's chain.
std::uint64_t chain_event(std::uint64_t chain, const EventBody& event);

/// Virtual CPU cost per unit of work, in nanoseconds at slowdown 1. Drives busyNanos
/// whenever busy time is modelled instead of measured.
struct CostModel {
    std::uint64_t seUpdate = 2000;
    std::uint64_t broadcast = 1000;
    std::uint64_t frameOut = 1500;
    std::uint64_t frameIn = 1500;
    std::uint64_t localDelivery = 1000;
    std::uint64_t remoteDelivery = 6000;
    std::uint64_t migration = 20000;
};

struct WorkCounters {
    std::uint64_t seUpdates = 0;
    std::uint64_t broadcasts = 0;
    std::uint64_t framesOut = 0;
    std::uint64_t framesIn = 0;
    std::uint64_t localDeliveries = 0;
    std::uint64_t remoteDeliveries = 0;
    std::uint64_t migrations = 0;

    std::uint64_t cost(const CostModel& model, double slowdown) const;
};

struct EngineConfig {
    ModelConfig model;
    HeuristicConfig heuristics;
    CostModel cost;
    std::uint64_t globalSeed = 1;
    std::uint32_t numLps = 1;
};

/// Per-LP measurements for one step. Interaction counts are attributed to the step the
/// event was emitted in, so a row is final only once the next step has delivered.
struct StepRecord {
    std::uint64_t local = 0;
    std::uint64_t remote = 0;
    std::uint64_t pings = 0;
    std::uint64_t migrations = 0;       // approved at the boundary closing this step
    std::uint32_t seCount = 0;          // entities hosted while the step ran
    std::uint64_t busyNanos = 0;
    std::int64_t wallNanos = 0;
    std::uint64_t digest = 0;           // partial digest after the model update
};

/// Frames one step produces, in send order per destination.
struct StepOutput {
    std::vector<AddressedFrame> frames;
    std::uint64_t busyNanos = 0;
};

/// One logical process: owns a slice of the entities, the replicated directory, the
/// per-step inboxes and the heuristic state.
///
/// Step t runs: boundary of t-1 (announcements applied), delivery of t-1 events,
/// model update emitting step-t events, heuristic evaluation, then migration frames
/// and STEP_DONE to every peer. The driver must call run_step(t) only when
/// ready_for(t) holds, and finish() after the last step.
class LogicalProcess {
public:
    LogicalProcess(LpId self, EngineConfig config, double cpuSlowdown = 1.0);

    LpId id() const { return self_; }
    const EngineConfig& config() const { return config_; }

    /// True when every peer's STEP_DONE(t-1) arrived and its event count matched.
    bool ready_for(Timestep t) const;
    /// Why step t is not complete yet (for timeout diagnostics).
    std::string diagnose(Timestep t) const;

    StepOutput run_step(Timestep t);
    /// Records when this LP sent STEP_DONE(t); arrival lags are measured from here.
    void mark_ready(Timestep t, VirtualNanos at);

    /// Hands one received frame to the LP. HELLO and BYE belong to the driver and are rejected.
    void on_frame(LpId from, const Frame& frame, VirtualNanos arrival);

    /// Applies the boundary of the last step and delivers its events. Returns the modelled cost.
    std::uint64_t finish(Timestep lastStep);

    /// Report measured processing time instead of the cost model (real-time drivers).
    void set_measure_busy(bool measured) { measureBusy_ = measured; }
    void set_wall(Timestep t, std::int64_t wallNanos);

    const PlacementMap& placement() const { return placement_; }
    const std::vector<StepRecord>& records() const { return records_; }
    const LpSpeedView& speed_view() const { return speed_; }
    std::size_t local_count() const { return entities_.size(); }
    std::vector<SeId> local_ids() const;
    /// Most recent GAIA+ plan computed by this LP (empty before the first evaluation).
    const std::optional<LoadPlan>& last_plan() const { return lastPlan_; }
    /// Every migration approved so far, in boundary order (identical on all LPs).
    const std::vector<MigrationIntent>& applied_migrations() const { return applied_; }

private:
    struct Entity {
        MobileHostState model;
        std::uint64_t chain = 0;
        std::optional<Timestep> lastMigration;
        SeCommStats stats;
    };

    struct PeerProgress {
        std::optional<StepDoneBody> done;
        std::uint32_t eventsReceived = 0;
        VirtualNanos doneArrival = 0;
    };

    struct StepInbox {
        std::vector<PeerProgress> peers;
        std::vector<InboundEvent> events;
        std::vector<MigrationIntent> announces;
        std::map<SeId, Bytes> data;
    };

    StepInbox& inbox(Timestep t);
    StepRecord& record(Timestep t);
    void apply_boundary(Timestep b, WorkCounters& work);
    void deliver(Timestep emitted, Timestep now, WorkCounters& work);
    std::vector<MigrationIntent> evaluate(Timestep t);
    std::vector<MigrationIntent> filter_at_boundary(std::vector<MigrationIntent> all) const;
    void observe_lag(LpId peer, Timestep t);

    LpId self_;
    EngineConfig config_;
    double slowdown_;
    bool measureBusy_ = false;
    PlacementMap placement_;
    std::map<SeId, Entity> entities_;
    std::map<std::uint64_t, StepInbox> inboxes_;
    std::vector<InboundEvent> loopback_;
    Timestep loopbackStep_{0};
    std::vector<MigrationIntent> ownIntents_;
    Timestep ownIntentStep_{0};
    std::vector<StepRecord> records_;       // index = step
    std::map<std::uint64_t, VirtualNanos> readyAt_;
    LpSpeedView speed_;
    std::optional<LoadPlan> lastPlan_;
    std::vector<MigrationIntent> applied_;
    NeighborGrid grid_;
};

} // namespace adaptsim
