#include <doctest.h>

#include <thread>

#include "adaptsim/harness.hpp"
#include "adaptsim/realtime.hpp"
#include "ports.hpp"

using namespace adaptsim;

namespace {

TcpMeshOptions options(const std::vector<std::string>& peers, std::uint32_t self, std::uint64_t seed) {
    TcpMeshOptions o;
    o.peers = peers;
    o.self = LpId{self};
    o.globalSeed = seed;
    o.connectRetries = 20;
    o.connectBackoff = std::chrono::milliseconds(100);
    return o;
}

EngineConfig small() {
    EngineConfig c;
    c.model.numMh = 200;
    c.model.steps = 40;
    c.model.arena = {2000, 2000};
    c.heuristics.mode = HeuristicMode::Gaia;
    c.numLps = 3;
    c.globalSeed = 21;
    return c;
}

} // namespace

TEST_CASE("three LPs over loopback TCP match the simulated run") {
    const auto cfg = small();
    const auto peers = testing::free_loopback_peers(3);
    std::vector<RealtimeResult> results(3);
    std::vector<std::string> errors(3);
    std::vector<std::thread> threads;
    for (std::uint32_t k = 0; k < 3; ++k) {
        threads.emplace_back([&, k] {
            try {
                auto mesh = connect_tcp_mesh(options(peers, k, cfg.globalSeed));
                LogicalProcess lp(LpId{k}, cfg);
                RealtimeOptions ro;
                ro.barrierTimeout = std::chrono::seconds(20);
                results[k] = run_realtime(lp, *mesh, ro);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) CHECK(e.empty());

    std::vector<std::vector<StepRecord>> per;
    for (const auto& r : results) per.push_back(r.records);
    const auto merged = merge_lp_records(per, cfg.model.steps);
    const auto sim = run_sim(cfg, {});
    REQUIRE(merged.size() == sim.steps.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
        CHECK(merged[i].digest == sim.steps[i].digest);
        CHECK(merged[i].seCount == sim.steps[i].seCount);
    }
}

TEST_CASE("seed mismatch aborts the handshake on both ends") {
    const auto peers = testing::free_loopback_peers(2);
    std::string err0, err1;
    std::thread a([&] {
        try {
            connect_tcp_mesh(options(peers, 0, 1));
        } catch (const HandshakeError& e) {
            err0 = e.what();
        }
    });
    std::thread b([&] {
        try {
            connect_tcp_mesh(options(peers, 1, 2));
        } catch (const HandshakeError& e) {
            err1 = e.what();
        }
    });
    a.join();
    b.join();
    for (const auto& e : {err0, err1}) {
        CHECK(e.find("seed") != std::string::npos);
        CHECK(e.find(" 1") != std::string::npos);
        CHECK(e.find(" 2") != std::string::npos);
    }
}

TEST_CASE("two processes claiming one LP id cannot both listen") {
    const auto peers = testing::free_loopback_peers(2);
    std::string err;
    std::thread first([&] {
        try {
            connect_tcp_mesh(options(peers, 1, 5));
        } catch (const std::exception&) {
        }
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    try {
        auto o = options(peers, 1, 5);
        o.connectRetries = 2;
        connect_tcp_mesh(o);
    } catch (const HandshakeError& e) {
        err = e.what();
    }
    // release the first one
    std::thread lp0([&] {
        try {
            connect_tcp_mesh(options(peers, 0, 5));
        } catch (const std::exception&) {
        }
    });
    first.join();
    lp0.join();
    CHECK(err.find("cannot listen") != std::string::npos);
}

TEST_CASE("an absent peer aborts after the configured retries") {
    const auto peers = testing::free_loopback_peers(2);
    auto o = options(peers, 0, 5);
    o.connectRetries = 3;
    o.connectBackoff = std::chrono::milliseconds(50);
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(connect_tcp_mesh(o), RunAborted);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
}

TEST_CASE("a peer that disappears mid-run aborts the others") {
    auto cfg = small();
    cfg.model.steps = 100000;
    const auto peers = testing::free_loopback_peers(2);
    cfg.numLps = 2;
    std::string err;
    std::thread survivor([&] {
        try {
            auto mesh = connect_tcp_mesh(options(peers, 0, cfg.globalSeed));
            LogicalProcess lp(LpId{0}, cfg);
            RealtimeOptions ro;
            ro.barrierTimeout = std::chrono::seconds(5);
            run_realtime(lp, *mesh, ro);
        } catch (const RunAborted& e) {
            err = e.what();
        }
    });
    {
        auto mesh = connect_tcp_mesh(options(peers, 1, cfg.globalSeed));
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        mesh->close();  // like a killed process: the socket goes away without BYE
    }
    const auto t0 = std::chrono::steady_clock::now();
    survivor.join();
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
    CHECK_FALSE(err.empty());
}
