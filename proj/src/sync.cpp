#include "adaptsim/sync.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "adaptsim/rng.hpp"

namespace adaptsim {

void canonical_order(std::vector<InboundEvent>& events) {
    std::sort(events.begin(), events.end(), [](const InboundEvent& a, const InboundEvent& b) {
        if (a.body.sender != b.body.sender) return a.body.sender < b.body.sender;
        return a.body.seq < b.body.seq;
    });
    auto same = [](const InboundEvent& a, const InboundEvent& b) {
        return a.body.sender == b.body.sender && a.body.seq == b.body.seq;
    };
    if (auto dup = std::adjacent_find(events.begin(), events.end(), same); dup != events.end()) {
        std::ostringstream msg;
        msg << "duplicate event (sender " << dup->body.sender << ", seq " << dup->body.seq << ") in step "
            << dup->body.step;
        throw SyncError(msg.str());
    }
}

std::uint64_t se_digest(const MobileHostState& state, std::uint64_t inboxChain) {
    Bytes buf;
    buf.reserve(kMobileHostStateBytes);
    ByteWriter w(buf);
    write_state(state, w);
    ByteReader r(buf);
    std::uint64_t h = splitmix_fold(0, state.id.value);
    for (std::size_t i = 0; i < kMobileHostStateBytes / 8; ++i) {
        h = splitmix_fold(h, r.u64());
    }
    return splitmix_fold(h, inboxChain);
}

std::uint64_t step_digest(std::span<const MobileHostState> states, std::span<const std::uint64_t> chains) {
    if (states.size() != chains.size()) {
        throw std::invalid_argument("step_digest: states and chains differ in length");
    }
    std::uint64_t d = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        d ^= se_digest(states[i], chains[i]);
    }
    return d;
}

std::uint64_t chain_event(std::uint64_t chain, const EventBody& event) {
    chain = splitmix_fold(chain, event.sender.value);
    chain = splitmix_fold(chain, (event.step.value << 32) ^ event.seq);
    return chain;
}

std::uint64_t WorkCounters::cost(const CostModel& m, double slowdown) const {
    const double units = static_cast<double>(seUpdates * m.seUpdate + broadcasts * m.broadcast + framesOut * m.frameOut +
                                             framesIn * m.frameIn + localDeliveries * m.localDelivery +
                                             remoteDeliveries * m.remoteDelivery + migrations * m.migration);
    return static_cast<std::uint64_t>(std::llround(units * slowdown));
}

LogicalProcess::LogicalProcess(LpId self, EngineConfig config, double cpuSlowdown)
    : self_(self),
      config_(std::move(config)),
      slowdown_(cpuSlowdown),
      placement_(PlacementMap::round_robin(config_.model.numMh, config_.numLps)),
      speed_(config_.numLps, config_.heuristics.emaAlpha, config_.heuristics.lagWeight),
      grid_(config_.model.arena, config_.model.radius) {
    if (self.value >= config_.numLps) {
        throw SyncError("LP id " + std::to_string(self.value) + " outside [0, " + std::to_string(config_.numLps) + ")");
    }
    for (std::uint64_t i = 0; i < config_.model.numMh; ++i) {
        const SeId se{i};
        if (placement_.lookup(se) == self_) {
            entities_.emplace(se, Entity{initial_state(se, config_.model, config_.globalSeed), 0, std::nullopt,
                                         SeCommStats(config_.heuristics.window, config_.numLps)});
        }
    }
    records_.resize(config_.model.steps + 1);
}

std::vector<SeId> LogicalProcess::local_ids() const {
    std::vector<SeId> out;
    out.reserve(entities_.size());
    for (const auto& [se, e] : entities_) {
        out.push_back(se);
    }
    return out;
}

LogicalProcess::StepInbox& LogicalProcess::inbox(Timestep t) {
    auto [it, inserted] = inboxes_.try_emplace(t.value);
    if (inserted) {
        it->second.peers.resize(config_.numLps);
    }
    return it->second;
}

StepRecord& LogicalProcess::record(Timestep t) {
    if (t.value >= records_.size()) {
        records_.resize(t.value + 1);
    }
    return records_[t.value];
}

bool LogicalProcess::ready_for(Timestep t) const {
    if (t.value <= 1) {
        return true;
    }
    const auto it = inboxes_.find(t.value - 1);
    for (std::uint32_t p = 0; p < config_.numLps; ++p) {
        if (p == self_.value) {
            continue;
        }
        if (it == inboxes_.end()) {
            return false;
        }
        const auto& peer = it->second.peers[p];
        if (!peer.done || peer.eventsReceived != peer.done->sentCount) {
            return false;
        }
    }
    return true;
}

std::string LogicalProcess::diagnose(Timestep t) const {
    std::ostringstream msg;
    msg << "LP " << self_.value << " waiting on step " << t.value << ":";
    const auto it = inboxes_.find(t.value);
    for (std::uint32_t p = 0; p < config_.numLps; ++p) {
        if (p == self_.value) {
            continue;
        }
        if (it == inboxes_.end() || !it->second.peers[p].done) {
            const auto received = it == inboxes_.end() ? 0u : it->second.peers[p].eventsReceived;
            msg << " no STEP_DONE from LP " << p << " (" << received << " events so far);";
            continue;
        }
        const auto& peer = it->second.peers[p];
        if (peer.eventsReceived != peer.done->sentCount) {
            msg << " count mismatch from LP " << p << ": STEP_DONE announced " << peer.done->sentCount
                << " events, " << peer.eventsReceived << " arrived;";
        }
    }
    return msg.str();
}

void LogicalProcess::on_frame(LpId from, const Frame& frame, VirtualNanos arrival) {
    if (from.value >= config_.numLps || from == self_) {
        throw SyncError("frame from invalid LP " + std::to_string(from.value));
    }
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, EventBody>) {
                auto& box = inbox(body.step);
                box.events.push_back({body, from});
                ++box.peers[from.value].eventsReceived;
            } else if constexpr (std::is_same_v<T, StepDoneBody>) {
                auto& peer = inbox(body.step).peers[from.value];
                if (peer.done) {
                    throw SyncError("second STEP_DONE for step " + std::to_string(body.step.value) + " from LP " +
                                    std::to_string(from.value));
                }
                peer.done = body;
                peer.doneArrival = arrival;
                speed_.observe_busy(from, static_cast<double>(body.busyNanos));
                if (readyAt_.count(body.step.value) != 0) {
                    observe_lag(from, body.step);
                }
            } else if constexpr (std::is_same_v<T, MigrateAnnounceBody>) {
                if (body.from != from) {
                    throw SyncError("LP " + std::to_string(from.value) + " announced a migration on behalf of LP " +
                                    std::to_string(body.from.value));
                }
                inbox(body.step).announces.push_back(
                    {body.se, body.from, body.to, body.step, MigrationReason::Clustering});
            } else if constexpr (std::is_same_v<T, MigrateDataBody>) {
                inbox(body.step).data[body.se] = body.state;
            } else {
                throw SyncError(std::string("unexpected ") + to_string(kind_of(frame)) + " frame inside the step loop");
            }
        },
        frame);
}

void LogicalProcess::observe_lag(LpId peer, Timestep t) {
    const auto& p = inboxes_.at(t.value).peers[peer.value];
    const VirtualNanos lag = std::max<VirtualNanos>(0, p.doneArrival - readyAt_.at(t.value));
    speed_.observe_lag(peer, static_cast<double>(lag));
}

void LogicalProcess::mark_ready(Timestep t, VirtualNanos at) {
    readyAt_[t.value] = at;
    readyAt_.erase(readyAt_.begin(), readyAt_.lower_bound(t.value > 4 ? t.value - 4 : 0));
    // self sits at the mean of what it sees, so lag ranks peers without flattering self
    double peerLag = 0.0;
    for (std::uint32_t p = 0; p < config_.numLps; ++p) {
        if (p != self_.value) peerLag += speed_.lag_ema(LpId{p});
    }
    speed_.observe_lag(self_, config_.numLps > 1 ? peerLag / (config_.numLps - 1) : 0.0);
    if (auto it = inboxes_.find(t.value); it != inboxes_.end()) {
        for (std::uint32_t p = 0; p < config_.numLps; ++p) {
            if (p != self_.value && it->second.peers[p].done) {
                observe_lag(LpId{p}, t);
            }
        }
    }
}

std::vector<MigrationIntent> LogicalProcess::filter_at_boundary(std::vector<MigrationIntent> all) const {
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.se < b.se; });
    switch (config_.heuristics.mode) {
    case HeuristicMode::Static:
        return {};
    case HeuristicMode::Gaia:
        return symmetric_filter(all, placement_.counts(), config_.heuristics);
    case HeuristicMode::GaiaPlus: {
        // intents were gated by their source; only keep every LP populated
        std::vector<std::int64_t> counts(placement_.counts().begin(), placement_.counts().end());
        std::vector<MigrationIntent> approved;
        for (const auto& in : all) {
            if (counts[in.from.value] - 1 >= 1 && counts[in.to.value] > 0) {
                --counts[in.from.value];
                ++counts[in.to.value];
                approved.push_back(in);
            }
        }
        return approved;
    }
    }
    return {};
}

void LogicalProcess::apply_boundary(Timestep b, WorkCounters& work) {
    auto& box = inbox(b);
    std::vector<MigrationIntent> all = box.announces;
    if (ownIntentStep_ == b) {
        all.insert(all.end(), ownIntents_.begin(), ownIntents_.end());
    }
    placement_.validate(all);
    const auto approved = filter_at_boundary(std::move(all));

    for (const auto& in : approved) {
        if (in.from == self_) {
            entities_.erase(in.se);
            ++work.migrations;
        } else if (in.to == self_) {
            const auto it = box.data.find(in.se);
            if (it == box.data.end()) {
                throw SyncError("migration of entity " + std::to_string(in.se.value) + " approved at step " +
                                std::to_string(b.value) + " but its state never arrived");
            }
            const SeTransfer t = decode_transfer(in.se, it->second);
            entities_[in.se] = Entity{t.model, t.inboxChain, t.lastMigration, t.stats};
            ++work.migrations;
        }
    }
    placement_.apply_boundary_updates(approved, b);
    applied_.insert(applied_.end(), approved.begin(), approved.end());
    record(b).migrations = approved.size();
    ownIntents_.clear();
}

void LogicalProcess::deliver(Timestep emitted, Timestep now, WorkCounters& work) {
    auto& box = inbox(emitted);
    work.framesIn += box.events.size();
    std::vector<InboundEvent> events = std::move(box.events);
    if (loopbackStep_ == emitted) {
        events.insert(events.end(), std::make_move_iterator(loopback_.begin()), std::make_move_iterator(loopback_.end()));
        loopback_.clear();
    }
    canonical_order(events);

    std::vector<SeId> ids;
    std::vector<Position> positions;
    std::vector<Entity*> slots;
    ids.reserve(entities_.size());
    positions.reserve(entities_.size());
    slots.reserve(entities_.size());
    for (auto& [se, e] : entities_) {
        ids.push_back(se);
        positions.push_back(e.model.pos);
        slots.push_back(&e);
    }
    grid_.rebuild(ids, positions);

    auto& rec = record(emitted);
    auto receive = [&](Entity& r, const InboundEvent& ev) {
        r.chain = chain_event(r.chain, ev.body);
        r.stats.record(ev.source, now);
        if (ev.source == self_) {
            ++rec.local;
            ++work.localDeliveries;
        } else {
            ++rec.remote;
            ++work.remoteDeliveries;
        }
    };
    for (const auto& ev : events) {
        if (ev.body.dest == kBroadcast) {
            const Position from = decode_ping(ev.body.payload);
            grid_.for_each_in_range(from, ev.body.sender, [&](std::uint32_t idx) { receive(*slots[idx], ev); });
        } else if (auto it = entities_.find(ev.body.dest); it != entities_.end()) {
            receive(it->second, ev);
        }
    }
    inboxes_.erase(emitted.value);
}

std::vector<MigrationIntent> LogicalProcess::evaluate(Timestep t) {
    const auto& h = config_.heuristics;
    if (h.mode == HeuristicMode::Static || t.value % h.evalInterval != 0 || config_.numLps < 2) {
        return {};
    }
    std::vector<SeEvalInput> inputs;
    inputs.reserve(entities_.size());
    for (const auto& [se, e] : entities_) {
        inputs.push_back({se, e.stats.window_counts(t), e.lastMigration});
    }
    if (h.mode == HeuristicMode::Gaia) {
        return gaia_evaluate(inputs, self_, h, t);
    }
    if (!speed_.populated()) {
        return {};
    }
    lastPlan_ = gaia_plus_quota(speed_.step_times(), placement_.counts(), h);
    return gaia_plus_evaluate(inputs, self_, *lastPlan_, placement_.counts(), h, t);
}

StepOutput LogicalProcess::run_step(Timestep t) {
    if (!ready_for(t)) {
        throw SyncError("run_step called before the barrier: " + diagnose(Timestep{t.value - 1}));
    }
    const auto started = std::chrono::steady_clock::now();
    WorkCounters work;
    StepOutput out;

    if (t.value > 1) {
        const Timestep prev{t.value - 1};
        apply_boundary(prev, work);
        deliver(prev, t, work);
    }

    auto& rec = record(t);
    rec.seCount = static_cast<std::uint32_t>(entities_.size());

    // model update; events are numbered per sender per step and each broadcaster sends one
    const auto fanout = wire_fanout(self_, placement_.counts());
    std::vector<std::uint32_t> sent(config_.numLps, 0);
    std::uint64_t digest = 0;
    for (auto& [se, e] : entities_) {
        e.model = rwp_step(e.model, t, config_.globalSeed, config_.model);
        ++work.seUpdates;
        if (is_broadcaster(se, t, config_.globalSeed, config_.model.broadcastFraction)) {
            EventBody ev{t, se, 0, kBroadcast, encode_ping(e.model.pos)};
            for (const LpId lp : fanout) {
                out.frames.push_back({lp, ev});
                ++sent[lp.value];
                ++work.framesOut;
            }
            loopback_.push_back({std::move(ev), self_});
            ++work.broadcasts;
            ++rec.pings;
        }
        digest ^= se_digest(e.model, e.chain);
    }
    loopbackStep_ = t;
    rec.digest = digest;

    ownIntents_.clear();
    for (const auto& intent : evaluate(t)) {
        const auto& e = entities_.at(intent.se);
        try {
            auto frames = migrate_out(intent, SeTransfer{e.model, e.chain, t, e.stats}, config_.numLps);
            for (auto& f : frames) {
                out.frames.push_back(std::move(f));
                ++work.framesOut;
            }
            ownIntents_.push_back(intent);
            ++work.migrations;
        } catch (const FrameEncodeError& err) {
            spdlog::warn("LP {}: migration of entity {} dropped: {}", self_.value, intent.se.value, err.what());
        }
    }
    ownIntentStep_ = t;

    const std::uint64_t busy =
        measureBusy_ ? static_cast<std::uint64_t>((std::chrono::steady_clock::now() - started).count())
                     : work.cost(config_.cost, slowdown_);
    rec.busyNanos = busy;
    out.busyNanos = busy;
    for (std::uint32_t p = 0; p < config_.numLps; ++p) {
        if (p != self_.value) {
            out.frames.push_back({LpId{p}, StepDoneBody{t, sent[p], busy, rec.seCount}});
        }
    }
    speed_.observe_busy(self_, static_cast<double>(busy));
    return out;
}

std::uint64_t LogicalProcess::finish(Timestep lastStep) {
    if (!ready_for(Timestep{lastStep.value + 1})) {
        throw SyncError("finish called before the final barrier: " + diagnose(lastStep));
    }
    WorkCounters work;
    apply_boundary(lastStep, work);
    deliver(lastStep, Timestep{lastStep.value + 1}, work);
    return work.cost(config_.cost, slowdown_);
}

void LogicalProcess::set_wall(Timestep t, std::int64_t wallNanos) { record(t).wallNanos = wallNanos; }

} // namespace adaptsim
