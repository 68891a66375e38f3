#include <doctest.h>

#include <algorithm>
#include <thread>

#include "adaptsim/harness.hpp"
#include "adaptsim/realtime.hpp"
#include "adaptsim/sync.hpp"

using namespace adaptsim;

namespace {

InboundEvent ev(std::uint64_t sender, std::uint32_t seq) {
    return {EventBody{Timestep{1}, SeId{sender}, seq, kBroadcast, {}}, LpId{0}};
}

EngineConfig small(std::uint32_t lps, HeuristicMode mode, std::uint64_t n = 300, std::uint64_t steps = 60) {
    EngineConfig c;
    c.model.numMh = n;
    c.model.steps = steps;
    // denser than the default arena so a few hundred hosts still interact
    c.model.arena = {2000, 2000};
    c.heuristics.mode = mode;
    c.globalSeed = 5;
    c.numLps = lps;
    return c;
}

std::vector<std::uint64_t> digests(const SimResult& r) {
    std::vector<std::uint64_t> out;
    for (const auto& s : r.steps) out.push_back(s.digest);
    return out;
}

} // namespace

TEST_CASE("canonical order sorts by sender then seq") {
    std::vector<InboundEvent> e{ev(7, 0), ev(3, 1), ev(3, 0)};
    canonical_order(e);
    CHECK(e[0].body.sender == SeId{3});
    CHECK(e[0].body.seq == 0);
    CHECK(e[1].body.sender == SeId{3});
    CHECK(e[1].body.seq == 1);
    CHECK(e[2].body.sender == SeId{7});

    std::vector<InboundEvent> r{ev(3, 0), ev(3, 1), ev(7, 0)};
    std::reverse(r.begin(), r.end());
    canonical_order(r);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(r[i].body == e[i].body);

    std::vector<InboundEvent> none;
    canonical_order(none);
    CHECK(none.empty());

    std::vector<InboundEvent> dup{ev(3, 0), ev(3, 0)};
    CHECK_THROWS_AS(canonical_order(dup), SyncError);
}

TEST_CASE("digest is order-free and sensitive to every bit of state") {
    const ModelConfig cfg;
    std::vector<MobileHostState> states;
    std::vector<std::uint64_t> chains;
    for (std::uint64_t i = 0; i < 50; ++i) {
        states.push_back(initial_state(SeId{i}, cfg, 3));
        chains.push_back(i * 977);
    }
    const auto base = step_digest(states, chains);
    std::reverse(states.begin(), states.end());
    std::reverse(chains.begin(), chains.end());
    CHECK(step_digest(states, chains) == base);

    auto flipped = states;
    flipped[10].pos.x = std::bit_cast<double>(std::bit_cast<std::uint64_t>(flipped[10].pos.x) ^ 1);
    CHECK(step_digest(flipped, chains) != base);
    auto chain2 = chains;
    chain2[3] ^= 1ULL << 40;
    CHECK(step_digest(states, chain2) != base);

    const EventBody a{Timestep{2}, SeId{1}, 0, kBroadcast, {}};
    const EventBody b{Timestep{2}, SeId{1}, 1, kBroadcast, {}};
    CHECK(chain_event(chain_event(0, a), b) != chain_event(chain_event(0, b), a));
}

TEST_CASE("a single LP passes every barrier on its own") {
    auto cfg = small(1, HeuristicMode::Gaia, 100, 20);
    LogicalProcess lp(LpId{0}, cfg);
    for (std::uint64_t t = 1; t <= 20; ++t) {
        REQUIRE(lp.ready_for(Timestep{t}));
        const auto out = lp.run_step(Timestep{t});
        CHECK(out.frames.empty());
        lp.mark_ready(Timestep{t}, static_cast<VirtualNanos>(t));
    }
    lp.finish(Timestep{20});
    for (std::uint64_t t = 1; t <= 20; ++t) {
        CHECK(lp.records()[t].remote == 0);
        CHECK(lp.records()[t].migrations == 0);
    }
}

TEST_CASE("results do not depend on the partition") {
    for (auto mode : {HeuristicMode::Static, HeuristicMode::Gaia, HeuristicMode::GaiaPlus}) {
        const auto oracle = digests(run_sim(small(1, HeuristicMode::Static), {}));
        for (std::uint32_t lps : {2u, 3u, 4u}) {
            CAPTURE(lps);
            CAPTURE(to_string(mode));
            const auto r = run_sim(small(lps, mode), {});
            CHECK(digests(r) == oracle);
            if (mode != HeuristicMode::Static && lps > 1) CHECK_FALSE(r.migrations.empty());
        }
    }
}

TEST_CASE("interaction totals are the same on any partition") {
    const auto one = run_sim(small(1, HeuristicMode::Static), {});
    const auto three = run_sim(small(3, HeuristicMode::Gaia), {});
    for (std::size_t i = 0; i < one.steps.size(); ++i) {
        CHECK(one.steps[i].local + one.steps[i].remote == three.steps[i].local + three.steps[i].remote);
        CHECK(one.steps[i].remote == 0);
        CHECK(one.steps[i].pings == three.steps[i].pings);
    }
}

TEST_CASE("threads over the in-process mesh reproduce the simulated run") {
    auto cfg = small(3, HeuristicMode::Gaia, 200, 500);
    const auto sim = run_sim(cfg, {});
    const auto thr = run_threads(cfg, NetProfile{}, RealtimeOptions{});
    REQUIRE(thr.perLp.size() == 3);
    for (const auto& recs : thr.perLp) CHECK(recs.size() == 501);
    CHECK(digests(thr) == digests(sim));
    CHECK(thr.finalCounts == sim.finalCounts);
}

TEST_CASE("a short event count blocks the barrier and aborts with a diagnostic") {
    auto cfg = small(2, HeuristicMode::Static, 10, 3);
    auto meshes = make_in_process_mesh(2);
    LogicalProcess lp(LpId{0}, cfg);
    RealtimeOptions opts;
    opts.barrierTimeout = std::chrono::milliseconds(300);

    std::string error;
    std::thread runner([&] {
        try {
            run_realtime(lp, *meshes[0], opts);
        } catch (const RunAborted& e) {
            error = e.what();
        }
    });
    // play LP 1: four events but a STEP_DONE that promises five
    for (std::uint32_t i = 0; i < 4; ++i) {
        meshes[1]->send(LpId{0}, EventBody{Timestep{1}, SeId{1 + 2 * i}, 0, kBroadcast, encode_ping({0, 0})});
    }
    meshes[1]->send(LpId{0}, StepDoneBody{Timestep{1}, 5, 1000, 5});
    runner.join();
    CHECK(error.find("count mismatch") != std::string::npos);
    CHECK(error.find("announced 5") != std::string::npos);

    // LP 0 told its peer it gave up
    bool sawBye = false;
    while (auto in = meshes[1]->receive(Clock::now() + std::chrono::milliseconds(50))) {
        if (const auto* bye = std::get_if<ByeBody>(&*in->frame)) {
            sawBye = true;
            CHECK(bye->step.value < cfg.model.steps);
        }
    }
    CHECK(sawBye);
}

TEST_CASE("protocol violations are rejected") {
    auto cfg = small(3, HeuristicMode::Static, 30, 5);
    LogicalProcess lp(LpId{0}, cfg);
    CHECK_THROWS_AS(lp.on_frame(LpId{1}, HelloBody{}, 0), SyncError);
    CHECK_THROWS_AS(lp.on_frame(LpId{0}, ByeBody{}, 0), SyncError);
    CHECK_THROWS_AS(lp.on_frame(LpId{7}, StepDoneBody{}, 0), SyncError);
    CHECK_THROWS_AS(lp.on_frame(LpId{1}, MigrateAnnounceBody{Timestep{1}, SeId{2}, LpId{2}, LpId{0}}, 0), SyncError);
    lp.on_frame(LpId{1}, StepDoneBody{Timestep{1}, 0, 10, 10}, 0);
    CHECK_THROWS_AS(lp.on_frame(LpId{1}, StepDoneBody{Timestep{1}, 0, 10, 10}, 0), SyncError);
}
