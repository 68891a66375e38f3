#include "adaptsim/cli.hpp"

#include <fstream>
#include <ostream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "adaptsim/realtime.hpp"
#include "adaptsim/report.hpp"

namespace adaptsim {

namespace fs = std::filesystem;

namespace {

template <class F>
void write_file(const fs::path& p, F&& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw TraceError(p.string() + ": cannot create");
    }
    body(out);
    out.flush();
    if (!out) {
        throw TraceError(p.string() + ": write failed");
    }
}

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); }

} // namespace

void print_summary(std::ostream& out, const RunSummary& s, std::span<const std::uint32_t> finalCounts) {
    out << fmt::format("mode {}  N {}  LPs {}  steps {}\n", s.echo("mode").value_or("?"), s.echo("num_mh").value_or("?"),
                       s.echo("num_lps").value_or("?"), s.steps);
    out << fmt::format("wct {:.6f} s  avg LCR {}  final LCR {}\n", s.wctSeconds, opt(s.avgLcr), opt(s.finalLcr));
    out << fmt::format("interactions {}  pings {}  migrations {}\n", s.totalInteractions, s.totalPings,
                       s.totalMigrations);
    if (!finalCounts.empty()) {
        out << "final allocation";
        for (auto c : finalCounts) out << ' ' << c;
        out << '\n';
    }
}

SimResult execute(const RunConfig& config) {
    switch (config.mode) {
    case RunMode::Sim: {
        SimOptions o;
        o.profile = config.profile;
        o.networkSeed = config.networkSeed;
        return run_sim(config.engine, o);
    }
    case RunMode::Threads: {
        RealtimeOptions o;
        o.barrierTimeout = config.barrierTimeout;
        return run_threads(config.engine, config.profile, o);
    }
    case RunMode::Tcp: break;
    }
    throw ConfigError("run.mode = tcp needs one 'launch' per LP");
}

void write_run_traces(const RunConfig& config, const SimResult& result, const RunSummary& summary) {
    if (config.traceDir.empty()) return;
    fs::create_directories(config.traceDir);
    write_file(config.traceDir / "steps.csv", [&](std::ostream& o) { write_steps_csv(o, result.steps, config.engine.numLps); });
    write_file(config.traceDir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, summary); });
}

int cmd_run(const fs::path& configPath, const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err) {
    RunConfig config;
    try {
        config = load_config(configPath, overrides);
        if (config.mode == RunMode::Tcp) {
            throw ConfigError(configPath.string() + ": run.mode = tcp needs one 'launch' per LP");
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        spdlog::info("running {} LPs, N={}, {} steps, mode {} ({})", config.engine.numLps, config.engine.model.numMh,
                     config.engine.model.steps, to_string(config.engine.heuristics.mode), to_string(config.mode));
        const SimResult result = execute(config);
        const RunSummary summary = summarize(result.steps, static_cast<double>(result.wctNanos) / 1e9, config.echo());
        write_run_traces(config, result, summary);
        print_summary(out, summary, result.finalCounts);
        if (!result.steps.empty()) {
            out << "final digest " << hex64(result.steps.back().digest) << '\n';
        }
    } catch (const std::exception& e) {
        err << "run aborted: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_launch(const fs::path& configPath, std::optional<std::uint32_t> thisLp, const std::vector<std::string>& overrides,
               std::ostream& out, std::ostream& err) {
    RunConfig config;
    LpId self;
    try {
        config = load_config(configPath, overrides);
        if (config.mode != RunMode::Tcp) {
            throw ConfigError(configPath.string() + ": launch needs run.mode = tcp");
        }
        if (thisLp) config.thisLp = thisLp;
        if (!config.thisLp) {
            throw ConfigError("no LP id: pass --lp or set net.this_lp");
        }
        if (*config.thisLp >= config.engine.numLps) {
            throw ConfigError(fmt::format("LP id {} outside [0, {})", *config.thisLp, config.engine.numLps));
        }
        self = LpId{*config.thisLp};
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::unique_ptr<Mesh> mesh;
    try {
        TcpMeshOptions mo;
        mo.peers = config.peers;
        mo.self = self;
        mo.globalSeed = config.engine.globalSeed;
        mo.connectRetries = config.connectRetries;
        mo.connectBackoff = config.connectBackoff;
        mesh = connect_tcp_mesh(mo);
    } catch (const HandshakeError& e) {
        err << "handshake failed: " << e.what() << '\n';
        return kExitHandshake;
    } catch (const std::exception& e) {
        err << "connect failed: " << e.what() << '\n';
        return kExitRuntime;
    }

    try {
        LogicalProcess lp(self, config.engine, config.profile.cpu_slowdown(self));
        RealtimeOptions ro;
        ro.barrierTimeout = config.barrierTimeout;
        const RealtimeResult result = run_realtime(lp, *mesh, ro);
        const std::vector<std::vector<StepRecord>> mine{result.records};
        const auto rows = merge_lp_records(mine, config.engine.model.steps);
        const RunSummary summary = summarize(rows, static_cast<double>(result.wctNanos) / 1e9, config.echo());
        if (!config.traceDir.empty()) {
            const fs::path dir = config.traceDir / ("lp" + std::to_string(self.value));
            fs::create_directories(dir);
            write_file(dir / "lp_steps.csv",
                       [&](std::ostream& o) { write_lp_steps_csv(o, result.records, config.engine.model.steps); });
            write_file(dir / "lp_summary.csv", [&](std::ostream& o) { write_summary_csv(o, summary); });
        }
        out << "LP " << self.value << " done; entities held at the end: " << lp.local_count() << '\n';
        print_summary(out, summary, {});
    } catch (const std::exception& e) {
        err << "LP " << self.value << " aborted: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_report(const std::vector<fs::path>& dirs, const fs::path& outDir, std::ostream& out, std::ostream& err) {
    ReportOutput r;
    try {
        r = render_report(dirs, outDir);
    } catch (const std::exception& e) {
        err << "report failed: " << e.what() << '\n';
        return kExitRuntime;
    }
    for (const auto& d : r.diagnostics) err << "warning: " << d << '\n';
    if (r.tracesLoaded == 0) {
        err << "no usable trace among " << dirs.size() << " director" << (dirs.size() == 1 ? "y" : "ies") << '\n';
        return kExitRuntime;
    }
    std::ifstream table(outDir / "report.txt");
    out << table.rdbuf();
    for (const auto& f : r.files) out << "wrote " << f.string() << '\n';
    return kExitOk;
}

} // namespace adaptsim
