#include "adaptsim/realtime.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

namespace adaptsim {

namespace {

class Inbox {
public:
    void push(Incoming in) {
        {
            std::lock_guard lock(mu_);
            queue_.push_back(std::move(in));
        }
        cv_.notify_one();
    }

    std::optional<Incoming> pop(Clock::time_point deadline) {
        std::unique_lock lock(mu_);
        if (!cv_.wait_until(lock, deadline, [&] { return !queue_.empty(); })) {
            return std::nullopt;
        }
        Incoming in = std::move(queue_.front());
        queue_.pop_front();
        return in;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Incoming> queue_;
};

struct Hub {
    explicit Hub(std::uint32_t n) : inboxes(n) {}
    std::vector<Inbox> inboxes;
};

class InProcessMesh final : public Mesh {
public:
    InProcessMesh(std::shared_ptr<Hub> hub, LpId self) : hub_(std::move(hub)), self_(self) {}

    void send(LpId to, const Frame& frame) override {
        // through the codec, as on a real link
        hub_->inboxes.at(to.value).push(Incoming{self_, decode_frame(encode_frame(frame)), {}});
    }

    std::optional<Incoming> receive(Clock::time_point deadline) override {
        return hub_->inboxes[self_.value].pop(deadline);
    }

    void close() override {}

private:
    std::shared_ptr<Hub> hub_;
    LpId self_;
};

} // namespace

std::vector<std::unique_ptr<Mesh>> make_in_process_mesh(std::uint32_t numLps) {
    auto hub = std::make_shared<Hub>(numLps);
    std::vector<std::unique_ptr<Mesh>> out;
    for (std::uint32_t k = 0; k < numLps; ++k) {
        out.push_back(std::make_unique<InProcessMesh>(hub, LpId{k}));
    }
    return out;
}

RealtimeResult run_realtime(LogicalProcess& lp, Mesh& mesh, const RealtimeOptions& options) {
    const std::uint32_t n = lp.config().numLps;
    const std::uint64_t steps = lp.config().model.steps;
    lp.set_measure_busy(options.measureBusy);
    std::vector<bool> byeSeen(n, false);
    byeSeen[lp.id().value] = true;
    std::uint64_t current = 0;

    const auto t0 = Clock::now();
    auto since = [&] { return static_cast<std::int64_t>((Clock::now() - t0).count()); };

    auto pump = [&](Clock::time_point deadline) {
        auto in = mesh.receive(deadline);
        if (!in) {
            return false;
        }
        if (!in->frame) {
            throw RunAborted("link to LP " + std::to_string(in->from.value) + " closed: " + in->reason);
        }
        if (const auto* bye = std::get_if<ByeBody>(&*in->frame)) {
            if (bye->step.value < steps) {
                throw RunAborted("LP " + std::to_string(in->from.value) + " aborted after step " +
                                 std::to_string(bye->step.value));
            }
            byeSeen[in->from.value] = true;
            return true;
        }
        lp.on_frame(in->from, *in->frame, since());
        return true;
    };

    auto await = [&](auto done, const char* what) {
        const auto deadline = Clock::now() + options.barrierTimeout;
        while (!done()) {
            if (!pump(deadline)) {
                throw RunAborted(std::string("timed out waiting for ") + what + ": " +
                                 lp.diagnose(Timestep{current}));
            }
        }
    };

    RealtimeResult result;
    try {
        std::int64_t prevReady = 0;
        for (std::uint64_t t = 1; t <= steps; ++t) {
            current = t - 1;
            await([&] { return lp.ready_for(Timestep{t}); }, "the step barrier");
            StepOutput out = lp.run_step(Timestep{t});
            for (const auto& f : out.frames) {
                mesh.send(f.to, f.frame);
            }
            const std::int64_t ready = since();
            lp.set_wall(Timestep{t}, ready - prevReady);
            prevReady = ready;
            lp.mark_ready(Timestep{t}, ready);
        }
        current = steps;
        await([&] { return lp.ready_for(Timestep{steps + 1}); }, "the final barrier");
        lp.finish(Timestep{steps});
        result.wctNanos = since();
        for (std::uint32_t p = 0; p < n; ++p) {
            if (p != lp.id().value) mesh.send(LpId{p}, ByeBody{Timestep{steps}});
        }
        await([&] { return std::all_of(byeSeen.begin(), byeSeen.end(), [](bool b) { return b; }); }, "BYE");
    } catch (...) {
        const Timestep abortStep{std::min<std::uint64_t>(current, steps == 0 ? 0 : steps - 1)};
        for (std::uint32_t p = 0; p < n; ++p) {
            if (p == lp.id().value) continue;
            try {
                mesh.send(LpId{p}, ByeBody{abortStep});
            } catch (const std::exception& e) {
                spdlog::debug("BYE to LP {} failed: {}", p, e.what());
            }
        }
        mesh.close();
        throw;
    }
    mesh.close();
    result.records = lp.records();
    return result;
}

SimResult run_threads(const EngineConfig& config, const NetProfile& profile, const RealtimeOptions& options) {
    const std::uint32_t n = config.numLps;
    auto meshes = make_in_process_mesh(n);
    std::vector<std::unique_ptr<LogicalProcess>> lps;
    for (std::uint32_t k = 0; k < n; ++k) {
        lps.push_back(std::make_unique<LogicalProcess>(LpId{k}, config, profile.cpu_slowdown(LpId{k})));
    }
    std::vector<RealtimeResult> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    for (std::uint32_t k = 0; k < n; ++k) {
        threads.emplace_back([&, k] {
            try {
                results[k] = run_realtime(*lps[k], *meshes[k], options);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    SimResult out;
    for (std::uint32_t k = 0; k < n; ++k) {
        out.perLp.push_back(results[k].records);
        out.wctNanos = std::max(out.wctNanos, results[k].wctNanos);
        out.lastPlans.push_back(lps[k]->last_plan());
        out.finalStepTimes.push_back(lps[k]->speed_view().step_times());
    }
    out.steps = merge_lp_records(out.perLp, config.model.steps);
    out.migrations = lps[0]->applied_migrations();
    const auto fc = lps[0]->placement().counts();
    out.finalCounts.assign(fc.begin(), fc.end());
    return out;
}

} // namespace adaptsim
