#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adaptsim/config.hpp"
#include "adaptsim/harness.hpp"

namespace adaptsim {

/// Process exit codes of the adaptsim tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitRuntime = 1,     // run aborted, trace I/O failure, nothing to report
    kExitConfig = 2,      // config or command line rejected
    kExitHandshake = 3,   // tcp mesh could not agree on the run
};

/// Runs every LP in this process (mode sim or threads), writes steps.csv and
/// summary.csv when trace_dir is set, and prints the summary to `out`.
int cmd_run(const std::filesystem::path& configPath, const std::vector<std::string>& overrides, std::ostream& out,
            std::ostream& err);

/// One LP of a tcp run. `thisLp` overrides net.this_lp. Traces go to
/// trace_dir/lp<k>/.
int cmd_launch(const std::filesystem::path& configPath, std::optional<std::uint32_t> thisLp,
               const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err);

/// Charts and gain table for the given trace directories, written to `outDir`.
int cmd_report(const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& outDir, std::ostream& out,
               std::ostream& err);

/// In-process equivalent of cmd_run's computation, for callers that want the result.
SimResult execute(const RunConfig& config);

/// steps.csv and summary.csv into config.traceDir; no-op when it is empty.
void write_run_traces(const RunConfig& config, const SimResult& result, const RunSummary& summary);

void print_summary(std::ostream& out, const RunSummary& summary, std::span<const std::uint32_t> finalCounts);

} // namespace adaptsim
