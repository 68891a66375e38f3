#include "adaptsim/harness.hpp"

#include <numeric>
#include <queue>

namespace adaptsim {

namespace {

struct Item {
    VirtualNanos time;
    int kind;               // 0 = frame arrival, 1 = LP wake-up; arrivals first on ties
    std::uint64_t seq;
    std::uint32_t lp;
    std::uint32_t from;
    Bytes bytes;
};

struct Later {
    bool operator()(const Item& a, const Item& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.seq > b.seq;
    }
};

struct LpSlot {
    std::unique_ptr<LogicalProcess> lp;
    std::uint64_t next = 1;
    VirtualNanos prevReady = 0;
    bool waiting = false;
    bool done = false;
    std::vector<std::uint64_t> fingerprints;   // index = step
};

} // namespace

SimResult run_sim(const EngineConfig& config, const SimOptions& options) {
    const std::uint32_t n = config.numLps;
    const std::uint64_t steps = config.model.steps;
    options.profile.check_lp_range(n);

    SimNetwork net(options.profile, options.networkSeed);
    std::vector<LpSlot> slots(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        slots[k].lp = std::make_unique<LogicalProcess>(LpId{k}, config, options.profile.cpu_slowdown(LpId{k}));
        slots[k].fingerprints.assign(steps + 1, 0);
    }

    SimResult result;
    result.countsAtStep.assign(steps + 1, {});

    std::priority_queue<Item, std::vector<Item>, Later> queue;
    std::uint64_t seq = 0;
    for (std::uint32_t k = 0; k < n; ++k) {
        queue.push(Item{0, 1, seq++, k, 0, {}});
    }

    while (!queue.empty()) {
        Item item = queue.top();
        queue.pop();
        LpSlot& slot = slots[item.lp];
        LogicalProcess& lp = *slot.lp;

        if (item.kind == 0) {
            lp.on_frame(LpId{item.from}, decode_frame(item.bytes), item.time);
            if (slot.waiting && lp.ready_for(Timestep{slot.next})) {
                slot.waiting = false;
                queue.push(Item{item.time, 1, seq++, item.lp, 0, {}});
            }
            continue;
        }

        if (slot.done) continue;
        if (!lp.ready_for(Timestep{slot.next})) {
            slot.waiting = true;
            continue;
        }

        if (slot.next > steps) {
            const VirtualNanos end = item.time + static_cast<VirtualNanos>(lp.finish(Timestep{steps}));
            result.wctNanos = std::max(result.wctNanos, end);
            slot.done = true;
            continue;
        }

        const Timestep t{slot.next};
        StepOutput out = lp.run_step(t);
        const VirtualNanos ready = item.time + static_cast<VirtualNanos>(out.busyNanos);
        lp.set_wall(t, ready - slot.prevReady);
        slot.prevReady = ready;
        lp.mark_ready(t, ready);
        for (auto& f : out.frames) {
            Bytes bytes = encode_frame(f.frame);
            const VirtualNanos arrival = net.schedule(lp.id(), f.to, bytes.size(), ready);
            queue.push(Item{arrival, 0, seq++, f.to.value, item.lp, std::move(bytes)});
        }

        slot.fingerprints[t.value] = lp.placement().fingerprint();
        const auto counts = lp.placement().counts();
        if (item.lp == 0) {
            result.countsAtStep[t.value].assign(counts.begin(), counts.end());
        }
        if (options.checkReplicas) {
            const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
            if (total != config.model.numMh) {
                throw SyncError("conservation violated on LP " + std::to_string(item.lp) + " at step " +
                                std::to_string(t.value) + ": " + std::to_string(total) + " entities");
            }
            if (lp.local_count() != lp.placement().count(lp.id())) {
                throw SyncError("LP " + std::to_string(item.lp) + " hosts " + std::to_string(lp.local_count()) +
                                " entities but the directory says " + std::to_string(lp.placement().count(lp.id())));
            }
        }
        if (options.afterStep) {
            options.afterStep(lp, t);
        }
        ++slot.next;
        queue.push(Item{ready, 1, seq++, item.lp, 0, {}});
    }

    for (std::uint32_t k = 0; k < n; ++k) {
        if (!slots[k].done) {
            throw SyncError("simulation stalled: " + slots[k].lp->diagnose(Timestep{slots[k].next - 1}));
        }
    }
    if (options.checkReplicas) {
        for (std::uint64_t t = 1; t <= steps; ++t) {
            for (std::uint32_t k = 1; k < n; ++k) {
                if (slots[k].fingerprints[t] != slots[0].fingerprints[t]) {
                    throw SyncError("directory replicas of LP 0 and LP " + std::to_string(k) + " differ at step " +
                                    std::to_string(t));
                }
            }
        }
    }

    for (auto& s : slots) {
        result.perLp.push_back(s.lp->records());
        result.lastPlans.push_back(s.lp->last_plan());
        result.finalStepTimes.push_back(s.lp->speed_view().step_times());
    }
    result.steps = merge_lp_records(result.perLp, steps);
    result.migrations = slots[0].lp->applied_migrations();
    const auto fc = slots[0].lp->placement().counts();
    result.finalCounts.assign(fc.begin(), fc.end());
    return result;
}

} // namespace adaptsim
