#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "adaptsim/metrics.hpp"
#include "adaptsim/net_profile.hpp"
#include "adaptsim/sync.hpp"

namespace adaptsim {

struct SimOptions {
    NetProfile profile;
    /// Seeds the jitter stream of the simulated network. Does not touch the model.
    std::uint64_t networkSeed = 0;
    /// Compare directory replicas and entity conservation at every boundary.
    bool checkReplicas = true;
    /// Called after each LP finished a step (boundary of t-1 already applied).
    std::function<void(const LogicalProcess&, Timestep)> afterStep;
};

struct SimResult {
    std::vector<StepTrace> steps;
    std::vector<std::vector<StepRecord>> perLp;
    VirtualNanos wctNanos = 0;
    /// Entity counts per LP at each boundary; index = step the counts were in force for.
    std::vector<std::vector<std::uint32_t>> countsAtStep;
    std::vector<MigrationIntent> migrations;
    std::vector<std::uint32_t> finalCounts;
    /// GAIA+ plan last computed by each LP (empty when that LP never evaluated one).
    std::vector<std::optional<LoadPlan>> lastPlans;
    std::vector<std::vector<double>> finalStepTimes;   // per observer LP
};

/// Runs every LP of the configuration in this process on a single virtual clock.
/// Frames travel through a SimNetwork (latency, jitter, bandwidth, per-link FIFO),
/// busy time comes from the cost model scaled by each LP's CPU slowdown, and events
/// are processed strictly in virtual-time order, so the result is a pure function of
/// (config, options).
SimResult run_sim(const EngineConfig& config, const SimOptions& options);

} // namespace adaptsim
