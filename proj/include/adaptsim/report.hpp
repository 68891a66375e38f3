#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adaptsim/metrics.hpp"

namespace adaptsim {

/// One run as read back from disk.
struct LoadedTrace {
    std::filesystem::path dir;
    RunSummary summary;
    std::vector<StepTrace> steps;
};

/// Reads steps.csv + summary.csv, or merges lp<k>/lp_steps.csv + lp<k>/lp_summary.csv
/// left behind by a multi-process run. Problems are appended to `diagnostics` and
/// yield std::nullopt.
std::optional<LoadedTrace> load_trace(const std::filesystem::path& dir, std::vector<std::string>& diagnostics);

/// Merges the per-process traces of a tcp run: rows via merge_lp_records, WCT is the
/// slowest process, the config echo comes from LP 0.
LoadedTrace merge_lp_traces(const std::filesystem::path& dir, std::vector<std::vector<StepRecord>> perLp,
                            std::vector<RunSummary> lpSummaries);

struct GainRow {
    std::uint64_t numMh = 0;
    std::string mode;
    double wctSeconds = 0.0;
    std::optional<double> gainPercent;  // absent without a static run at the same N
    std::optional<double> avgLcr;
    std::uint64_t migrations = 0;
};

/// WCT per (N, mode) with gain against the static run of the same N.
std::vector<GainRow> gain_table(const std::vector<LoadedTrace>& traces);
std::string format_gain_table(const std::vector<GainRow>& rows);

struct ReportOutput {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> diagnostics;
    std::size_t tracesLoaded = 0;
};

/// Loads every directory and writes the charts into `outDir`:
///   messages.svg   interactions vs N, one series per mode   (needs >= 2 traces)
///   wct.svg        grouped bars of WCT per N and mode        (needs >= 2 traces)
///   lcr.svg        LCR per step with running average
///   allocation.svg entities per LP per step
/// plus report.txt with the gain table and one line per run.
ReportOutput render_report(const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& outDir);

} // namespace adaptsim
