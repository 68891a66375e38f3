#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adaptsim/sync.hpp"

namespace adaptsim {

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Local communication ratio; absent when nothing was delivered.
std::optional<double> lcr(std::uint64_t local, std::uint64_t remote);

/// One merged row of steps.csv.
struct StepTrace {
    std::uint64_t step = 0;
    std::uint64_t local = 0;
    std::uint64_t remote = 0;
    std::uint64_t pings = 0;
    std::uint64_t migrations = 0;
    std::vector<std::uint32_t> seCount;     // per LP
    std::vector<std::uint64_t> busyNanos;   // per LP
    std::int64_t wallNanos = 0;
    std::uint64_t digest = 0;               // XOR of the LP partials

    std::optional<double> lcr() const { return adaptsim::lcr(local, remote); }
    friend bool operator==(const StepTrace&, const StepTrace&) = default;
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct RunSummary {
    double wctSeconds = 0.0;
    std::uint64_t steps = 0;
    std::optional<double> avgLcr;
    std::optional<double> finalLcr;
    std::uint64_t totalInteractions = 0;
    std::uint64_t totalPings = 0;
    std::uint64_t totalMigrations = 0;
    ConfigEcho config;

    /// Value of an echoed config key, if present.
    std::optional<std::string> echo(const std::string& key) const;
};

/// Merges per-LP records (index = step) into global rows for steps 1..steps.
/// Interactions, pings and busy add up, the wall column takes the slowest LP, the
/// digest is the XOR of the partials. Migrations must agree across LPs.
std::vector<StepTrace> merge_lp_records(std::span<const std::vector<StepRecord>> perLp, std::uint64_t steps);

RunSummary summarize(std::span<const StepTrace> steps, double wctSeconds, ConfigEcho config);

/// (static - mode) / static, in percent.
double gain_percent(double staticWct, double modeWct);

void write_steps_csv(std::ostream& out, std::span<const StepTrace> steps, std::uint32_t numLps);
std::vector<StepTrace> read_steps_csv(std::istream& in, const std::string& name);

void write_summary_csv(std::ostream& out, const RunSummary& summary);
RunSummary read_summary_csv(std::istream& in, const std::string& name);

/// Per-LP trace written by each process of a multi-process run.
void write_lp_steps_csv(std::ostream& out, std::span<const StepRecord> records, std::uint64_t steps);
std::vector<StepRecord> read_lp_steps_csv(std::istream& in, const std::string& name);

std::string hex64(std::uint64_t v);

} // namespace adaptsim
