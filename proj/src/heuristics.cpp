#include "adaptsim/heuristics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adaptsim {

const char* to_string(HeuristicMode mode) {
    switch (mode) {
    case HeuristicMode::Static: return "static";
    case HeuristicMode::Gaia: return "gaia";
    case HeuristicMode::GaiaPlus: return "gaia+";
    }
    return "?";
}

std::optional<HeuristicMode> parse_mode(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    if (text == "static") return HeuristicMode::Static;
    if (text == "gaia") return HeuristicMode::Gaia;
    if (text == "gaia+" || text == "gaia_plus" || text == "gaiaplus") return HeuristicMode::GaiaPlus;
    return std::nullopt;
}

void HeuristicConfig::validate() const {
    auto fail = [](const char* what) { throw std::invalid_argument(what); };
    if (window == 0) fail("heuristics.window must be >= 1");
    if (evalInterval == 0) fail("heuristics.eval_interval must be >= 1");
    if (!(threshold > 0 && threshold < 1)) fail("heuristics.threshold must be in (0, 1)");
    if (migrationFactor < 1) fail("heuristics.migration_factor must be >= 1");
    if (!(tolerance >= 0 && tolerance < 1)) fail("heuristics.tolerance must be in [0, 1)");
    if (!(slowdownTrigger > 0)) fail("heuristics.slowdown_trigger must be > 0");
    if (!(quotaFraction > 0 && quotaFraction <= 1)) fail("heuristics.quota_fraction must be in (0, 1]");
    if (!(emaAlpha > 0 && emaAlpha <= 1)) fail("heuristics.ema_alpha must be in (0, 1]");
    if (!(lagWeight >= 0)) fail("heuristics.lag_weight must be >= 0");
}

// ---------------------------------------------------------------------------------------
// SeCommStats

SeCommStats::SeCommStats(std::uint32_t window, std::uint32_t numLps)
    : window_(window), numLps_(numLps), slotStep_(window, 0), counts_(std::size_t{window} * numLps, 0) {}

void SeCommStats::record(LpId peerOwner, Timestep step, std::uint32_t count) {
    const std::size_t slot = step.value % window_;
    if (slotStep_[slot] != step.value) {
        slotStep_[slot] = step.value;
        std::fill_n(counts_.begin() + slot * numLps_, numLps_, 0u);
    }
    counts_[slot * numLps_ + peerOwner.value] += count;
}

std::vector<std::uint32_t> SeCommStats::window_counts(Timestep now) const {
    std::vector<std::uint32_t> out(numLps_, 0);
    for (std::size_t slot = 0; slot < window_; ++slot) {
        const std::uint64_t s = slotStep_[slot];
        if (s == 0 || s > now.value || s + window_ <= now.value) {
            continue;
        }
        for (std::uint32_t lp = 0; lp < numLps_; ++lp) {
            out[lp] += counts_[slot * numLps_ + lp];
        }
    }
    return out;
}

void SeCommStats::encode(ByteWriter& w) const {
    w.u32(window_);
    w.u32(numLps_);
    for (std::size_t slot = 0; slot < window_; ++slot) {
        w.u64(slotStep_[slot]);
        for (std::uint32_t lp = 0; lp < numLps_; ++lp) {
            w.u32(counts_[slot * numLps_ + lp]);
        }
    }
}

SeCommStats SeCommStats::decode(ByteReader& r) {
    const std::uint32_t window = r.u32();
    const std::uint32_t numLps = r.u32();
    // each slot needs 8 + 4 * numLps bytes; refuse sizes the buffer cannot hold
    if (window == 0 || numLps == 0 || r.remaining() / (8 + 4ull * numLps) < window) {
        throw ShortRead("stats window does not fit the buffer");
    }
    SeCommStats s(window, numLps);
    for (std::size_t slot = 0; slot < window; ++slot) {
        s.slotStep_[slot] = r.u64();
        for (std::uint32_t lp = 0; lp < numLps; ++lp) {
            s.counts_[slot * numLps + lp] = r.u32();
        }
    }
    return s;
}

// ---------------------------------------------------------------------------------------
// Decisions

bool in_cooldown(const SeEvalInput& in, Timestep step, const HeuristicConfig& config) {
    return in.lastMigration && step.value < in.lastMigration->value + config.cooldown;
}

std::vector<MigrationIntent> gaia_evaluate(std::span<const SeEvalInput> entities, LpId self,
                                           const HeuristicConfig& config, Timestep step) {
    std::vector<MigrationIntent> out;
    for (const auto& e : entities) {
        if (in_cooldown(e, step, config)) {
            continue;
        }
        const std::uint64_t total = std::accumulate(e.counts.begin(), e.counts.end(), std::uint64_t{0});
        if (total == 0 || total < config.migrationFactor) {
            continue;
        }
        std::optional<std::uint32_t> best;
        for (std::uint32_t lp = 0; lp < e.counts.size(); ++lp) {
            if (lp != self.value && (!best || e.counts[lp] > e.counts[*best])) {
                best = lp;
            }
        }
        if (!best) {
            continue;
        }
        const double external = static_cast<double>(e.counts[*best]) / static_cast<double>(total);
        const double local = static_cast<double>(e.counts[self.value]) / static_cast<double>(total);
        if (external > config.threshold && external > local) {
            out.push_back({e.se, self, LpId{*best}, step, MigrationReason::Clustering});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.se < b.se; });
    return out;
}

std::vector<MigrationIntent> symmetric_filter(std::span<const MigrationIntent> intents,
                                              std::span<const std::uint32_t> lpSeCounts,
                                              const HeuristicConfig& config) {
    std::vector<MigrationIntent> ordered(intents.begin(), intents.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.se < b.se; });

    std::vector<std::int64_t> counts(lpSeCounts.begin(), lpSeCounts.end());
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double fair = total / static_cast<double>(counts.size());
    // the slack absorbs rounding in (1 +/- delta) * N / n; counts are integers
    const double cap = (1.0 + config.tolerance) * fair + 1e-9;
    const double floor = (1.0 - config.tolerance) * fair - 1e-9;

    std::vector<MigrationIntent> approved;
    // rejected intents that may still pair with a later opposite move; a pair nets to zero
    std::vector<std::optional<MigrationIntent>> waiting;
    for (const auto& in : ordered) {
        auto& src = counts[in.from.value];
        auto& dst = counts[in.to.value];
        if (static_cast<double>(dst + 1) <= cap && static_cast<double>(src - 1) >= floor && src - 1 >= 1) {
            --src;
            ++dst;
            approved.push_back(in);
            continue;
        }
        const auto match = std::find_if(waiting.begin(), waiting.end(), [&](const auto& w) {
            return w && w->from == in.to && w->to == in.from;
        });
        if (match != waiting.end()) {
            approved.push_back(**match);
            approved.push_back(in);
            match->reset();
        } else {
            waiting.emplace_back(in);
        }
    }
    std::sort(approved.begin(), approved.end(), [](const auto& a, const auto& b) { return a.se < b.se; });
    return approved;
}

LoadPlan gaia_plus_quota(std::span<const double> stepTimes, std::span<const std::uint32_t> lpSeCounts,
                         const HeuristicConfig& config) {
    const std::size_t n = stepTimes.size();
    LoadPlan plan;
    plan.slow.assign(n, false);
    plan.fast.assign(n, false);
    plan.allowance.assign(n, 0);
    plan.targetWeight.assign(n, 0.0);
    if (n == 0) {
        return plan;
    }
    plan.mean = std::accumulate(stepTimes.begin(), stepTimes.end(), 0.0) / static_cast<double>(n);
    const double m = plan.mean;
    if (!(m > 0)) {
        return plan;
    }
    for (std::size_t lp = 0; lp < n; ++lp) {
        const double st = stepTimes[lp];
        if (st > (1.0 + config.slowdownTrigger) * m) {
            plan.slow[lp] = true;
            const double raw = config.quotaFraction * lpSeCounts[lp] * (st - m) / st;
            // subtract a hair so exact products do not round up past the integer
            const auto allowance = static_cast<std::uint32_t>(std::ceil(raw - 1e-9));
            plan.allowance[lp] = lpSeCounts[lp] > 0 ? std::min(allowance, lpSeCounts[lp] - 1) : 0;
        } else if (st < (1.0 - config.slowdownTrigger) * m && lpSeCounts[lp] > 0) {
            plan.fast[lp] = true;
            plan.targetWeight[lp] = m - st;
        }
    }
    return plan;
}

namespace {

/// Splits `total` across weights by largest remainder; ties go to the lowest index.
std::vector<std::uint32_t> apportion(std::uint32_t total, std::span<const double> weights) {
    std::vector<std::uint32_t> out(weights.size(), 0);
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total == 0 || !(sum > 0)) {
        return out;
    }
    std::vector<std::pair<double, std::size_t>> remainders;
    std::uint32_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = total * weights[i] / sum;
        out[i] = static_cast<std::uint32_t>(std::floor(exact));
        assigned += out[i];
        if (weights[i] > 0) {
            remainders.emplace_back(exact - out[i], i);
        }
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
        ++out[remainders[k].second];
    }
    return out;
}

} // namespace

std::vector<MigrationIntent> gaia_plus_evaluate(std::span<const SeEvalInput> entities, LpId self, const LoadPlan& plan,
                                                std::span<const std::uint32_t> lpSeCounts,
                                                const HeuristicConfig& config, Timestep step) {
    std::vector<MigrationIntent> out;
    if (!plan.fast[self.value]) {
        for (const auto& in : gaia_evaluate(entities, self, config, step)) {
            if (!plan.slow[in.to.value] && lpSeCounts[in.to.value] > 0) {
                out.push_back(in);
            }
        }
    }

    if (plan.slow[self.value] && plan.allowance[self.value] > out.size()) {
        std::uint32_t extra = plan.allowance[self.value] - static_cast<std::uint32_t>(out.size());

        std::vector<double> weights = plan.targetWeight;
        weights[self.value] = 0.0;
        if (std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0; })) {
            // nobody is clearly fast: spread evenly over the LPs that are not slow
            for (std::size_t lp = 0; lp < weights.size(); ++lp) {
                if (lp != self.value && !plan.slow[lp] && lpSeCounts[lp] > 0) {
                    weights[lp] = 1.0;
                }
            }
        }
        const auto quota = apportion(extra, weights);

        std::vector<bool> taken(entities.size(), false);
        {
            std::size_t k = 0;
            for (std::size_t i = 0; i < entities.size() && k < out.size(); ++i) {
                // both sequences are sorted by SeId
                while (k < out.size() && out[k].se < entities[i].se) ++k;
                if (k < out.size() && out[k].se == entities[i].se) taken[i] = true;
            }
        }
        for (std::uint32_t target = 0; target < quota.size(); ++target) {
            if (quota[target] == 0) {
                continue;
            }
            std::vector<std::pair<double, std::size_t>> ranked;
            for (std::size_t i = 0; i < entities.size(); ++i) {
                const auto& e = entities[i];
                if (taken[i] || in_cooldown(e, step, config)) {
                    continue;
                }
                const double total = std::accumulate(e.counts.begin(), e.counts.end(), 0.0);
                ranked.emplace_back(total > 0 ? e.counts[target] / total : 0.0, i);
            }
            // highest fraction toward the target first, then lowest SeId
            std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return entities[a.second].se < entities[b.second].se;
            });
            for (std::size_t k = 0; k < ranked.size() && k < quota[target]; ++k) {
                taken[ranked[k].second] = true;
                out.push_back({entities[ranked[k].second].se, self, LpId{target}, step, MigrationReason::Load});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.se < b.se; });
    return out;
}

// ---------------------------------------------------------------------------------------
// LpSpeedView

LpSpeedView::LpSpeedView(std::uint32_t numLps, double alpha, double lagWeight)
    : alpha_(alpha), lagWeight_(lagWeight), busy_(numLps), lag_(numLps) {}

void LpSpeedView::observe_busy(LpId lp, double busyNanos) {
    auto& slot = busy_[lp.value];
    slot = slot ? alpha_ * busyNanos + (1.0 - alpha_) * *slot : busyNanos;
}

void LpSpeedView::observe_lag(LpId lp, double lagNanos) {
    auto& slot = lag_[lp.value];
    slot = slot ? alpha_ * lagNanos + (1.0 - alpha_) * *slot : lagNanos;
}

bool LpSpeedView::populated() const {
    return std::all_of(busy_.begin(), busy_.end(), [](const auto& v) { return v.has_value(); });
}

double LpSpeedView::step_time(LpId lp) const { return busy_ema(lp) + lagWeight_ * lag_ema(lp); }

std::vector<double> LpSpeedView::step_times() const {
    std::vector<double> out(busy_.size());
    for (std::uint32_t lp = 0; lp < out.size(); ++lp) {
        out[lp] = step_time(LpId{lp});
    }
    return out;
}

} // namespace adaptsim
