#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptsim/bytes.hpp"
#include "adaptsim/ids.hpp"

namespace adaptsim {

enum class HeuristicMode : std::uint8_t { Static, Gaia, GaiaPlus };

const char* to_string(HeuristicMode mode);
/// Accepts "static", "gaia", "gaia+" / "gaia_plus" (case-insensitive).
std::optional<HeuristicMode> parse_mode(std::string text);

struct HeuristicConfig {
    HeuristicMode mode = HeuristicMode::Static;
    std::uint32_t window = 16;            // W, steps of history per entity
    std::uint32_t evalInterval = 8;       // E, evaluate when step % E == 0
    double threshold = 0.6;               // theta, external fraction needed to move
    std::uint32_t migrationFactor = 8;    // MF, minimum interactions in the window
    double tolerance = 0.1;               // delta, symmetric band half-width
    std::uint32_t cooldown = 24;          // C, steps between two moves of one entity
    double slowdownTrigger = 0.15;        // epsilon, slow/fast band around the mean
    double quotaFraction = 0.2;           // q, share of the excess shed per interval
    double emaAlpha = 0.3;                // alpha, smoothing of the speed view
    double lagWeight = 0.5;               // weight of STEP_DONE arrival lag in stepTime

    void validate() const;
};

enum class MigrationReason : std::uint8_t { Clustering, Load };

struct MigrationIntent {
    SeId se;
    LpId from;
    LpId to;
    Timestep decidedAt;
    MigrationReason reason = MigrationReason::Clustering;

    friend bool operator==(const MigrationIntent&, const MigrationIntent&) = default;
};

/// Sliding window of per-LP interaction counts for one entity. Slot (step % W)
/// holds the counts of one step; a slot is recycled when a newer step lands on it.
class SeCommStats {
public:
    SeCommStats() = default;
    SeCommStats(std::uint32_t window, std::uint32_t numLps);

    void record(LpId peerOwner, Timestep step, std::uint32_t count = 1);

    /// Per-LP totals over steps (now - W, now].
    std::vector<std::uint32_t> window_counts(Timestep now) const;

    std::uint32_t window() const { return window_; }
    std::uint32_t num_lps() const { return numLps_; }

    void encode(ByteWriter& w) const;
    static SeCommStats decode(ByteReader& r);

    friend bool operator==(const SeCommStats&, const SeCommStats&) = default;

private:
    std::uint32_t window_ = 0;
    std::uint32_t numLps_ = 0;
    std::vector<std::uint64_t> slotStep_;
    std::vector<std::uint32_t> counts_;
};

struct SeEvalInput {
    SeId se;
    std::vector<std::uint32_t> counts;    // window totals per LP
    std::optional<Timestep> lastMigration;
};

bool in_cooldown(const SeEvalInput& in, Timestep step, const HeuristicConfig& config);

/// Communication clustering: an entity whose window holds at least MF interactions
/// and whose busiest external LP takes more than theta of them (and more than the
/// local share) is proposed for migration there. Intents come out ordered by SeId.
std::vector<MigrationIntent> gaia_evaluate(std::span<const SeEvalInput> entities, LpId self,
                                           const HeuristicConfig& config, Timestep step);

/// Symmetric load filter. Intents are taken in SeId order; each is approved only if,
/// after the previously approved ones, the target stays <= (1+delta)N/n and the source
/// stays >= (1-delta)N/n (and keeps at least one entity). A rejected intent is
/// approved after all when a later intent moves the opposite way between the same two
/// LPs and is rejected too; the pair leaves every count unchanged.
std::vector<MigrationIntent> symmetric_filter(std::span<const MigrationIntent> intents,
                                              std::span<const std::uint32_t> lpSeCounts,
                                              const HeuristicConfig& config);

struct LoadPlan {
    double mean = 0.0;
    std::vector<bool> slow;
    std::vector<bool> fast;
    std::vector<std::uint32_t> allowance;  // outbound LOAD budget per LP
    std::vector<double> targetWeight;      // preference as a destination
};

/// Asymmetric quota. With M the mean stepTime, an LP above (1+eps)M is slow and may
/// shed ceil(q * seCount * (stepTime - M) / stepTime) entities (never its last one);
/// an LP below (1-eps)M is fast and attracts load with weight (M - stepTime).
LoadPlan gaia_plus_quota(std::span<const double> stepTimes, std::span<const std::uint32_t> lpSeCounts,
                         const HeuristicConfig& config);

/// Full asymmetric decision for LP `self`: clustering intents gated by the plan
/// (fast LPs keep their entities, nobody pushes into a slow LP), topped up by LOAD
/// intents when `self` is slow.
std::vector<MigrationIntent> gaia_plus_evaluate(std::span<const SeEvalInput> entities, LpId self, const LoadPlan& plan,
                                                std::span<const std::uint32_t> lpSeCounts,
                                                const HeuristicConfig& config, Timestep step);

/// Each LP's view of everyone's speed: EMA of busyNanos plus a weighted EMA of the
/// STEP_DONE arrival lag observed locally. The owner feeds its own lag slot with the
/// mean of the peer lags, so lag ranks peers without making the owner look fastest.
class LpSpeedView {
public:
    LpSpeedView(std::uint32_t numLps, double alpha, double lagWeight);

    void observe_busy(LpId lp, double busyNanos);
    void observe_lag(LpId lp, double lagNanos);

    bool populated() const;
    double step_time(LpId lp) const;
    std::vector<double> step_times() const;
    double busy_ema(LpId lp) const { return busy_[lp.value].value_or(0.0); }
    double lag_ema(LpId lp) const { return lag_[lp.value].value_or(0.0); }

private:
    double alpha_;
    double lagWeight_;
    std::vector<std::optional<double>> busy_;
    std::vector<std::optional<double>> lag_;
};

} // namespace adaptsim
