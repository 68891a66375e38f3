#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "adaptsim/cli.hpp"
#include "adaptsim/config.hpp"
#include "adaptsim/frame.hpp"
#include "adaptsim/harness.hpp"
#include "adaptsim/report.hpp"

namespace py = pybind11;
using namespace adaptsim;

namespace {

py::dict step_dict(const StepTrace& s) {
    py::dict d;
    d["step"] = s.step;
    d["local"] = s.local;
    d["remote"] = s.remote;
    d["pings"] = s.pings;
    d["lcr"] = s.lcr();
    d["migrations"] = s.migrations;
    d["se_count"] = s.seCount;
    d["busy_ns"] = s.busyNanos;
    d["wall_ns"] = s.wallNanos;
    d["digest"] = hex64(s.digest);
    return d;
}

py::dict summary_dict(const RunSummary& s) {
    py::dict d;
    d["wct_s"] = s.wctSeconds;
    d["steps"] = s.steps;
    d["avg_lcr"] = s.avgLcr;
    d["final_lcr"] = s.finalLcr;
    d["total_interactions"] = s.totalInteractions;
    d["total_pings"] = s.totalPings;
    d["total_migrations"] = s.totalMigrations;
    py::dict config;
    for (const auto& [k, v] : s.config) config[py::str(k)] = v;
    d["config"] = config;
    return d;
}

py::bytes to_py(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

py::dict frame_dict(const Frame& f) {
    py::dict d;
    d["kind"] = to_string(kind_of(f));
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, HelloBody>) {
                d["protocol_version"] = b.protocolVersion;
                d["lp"] = b.lp.value;
                d["num_lps"] = b.numLps;
                d["global_seed"] = b.globalSeed;
            } else if constexpr (std::is_same_v<T, EventBody>) {
                d["step"] = b.step.value;
                d["sender"] = b.sender.value;
                d["seq"] = b.seq;
                d["dest"] = b.dest.value;
                d["payload"] = to_py(b.payload);
            } else if constexpr (std::is_same_v<T, StepDoneBody>) {
                d["step"] = b.step.value;
                d["sent_count"] = b.sentCount;
                d["busy_ns"] = b.busyNanos;
                d["se_count"] = b.seCount;
            } else if constexpr (std::is_same_v<T, MigrateAnnounceBody>) {
                d["step"] = b.step.value;
                d["se"] = b.se.value;
                d["from"] = b.from.value;
                d["to"] = b.to.value;
            } else if constexpr (std::is_same_v<T, MigrateDataBody>) {
                d["step"] = b.step.value;
                d["se"] = b.se.value;
                d["state"] = to_py(b.state);
            } else {
                d["step"] = b.step.value;
            }
        },
        f);
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings to the adaptsim engine";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FrameDecodeError>(m, "FrameDecodeError", PyExc_ValueError);

    m.def(
        "run",
        [](const std::filesystem::path& config, const std::vector<std::string>& overrides) {
            const RunConfig rc = load_config(config, overrides);
            SimResult r;
            {
                py::gil_scoped_release release;
                r = execute(rc);
            }
            const auto summary = summarize(r.steps, static_cast<double>(r.wctNanos) / 1e9, rc.echo());
            write_run_traces(rc, r, summary);
            py::list steps;
            for (const auto& s : r.steps) steps.append(step_dict(s));
            py::dict out;
            out["summary"] = summary_dict(summary);
            out["steps"] = steps;
            out["final_counts"] = r.finalCounts;
            return out;
        },
        py::arg("config"), py::arg("overrides") = std::vector<std::string>{},
        "Run a sim or threads configuration in this process and return its summary and per-step rows.\n\nWrites steps.csv and summary.csv when run.trace_dir is set.");

    m.def(
        "load_trace",
        [](const std::filesystem::path& dir) {
            std::vector<std::string> diag;
            const auto t = load_trace(dir, diag);
            if (!t) throw std::runtime_error(diag.empty() ? "no trace in " + dir.string() : diag.front());
            py::list steps;
            for (const auto& s : t->steps) steps.append(step_dict(s));
            py::dict out;
            out["summary"] = summary_dict(t->summary);
            out["steps"] = steps;
            return out;
        },
        py::arg("dir"), "Read steps.csv/summary.csv, or merge the lp<k>/ files of a tcp run.");

    m.def(
        "render_report",
        [](const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& out) {
            const auto r = render_report(dirs, out);
            return py::make_tuple(r.files, r.diagnostics);
        },
        py::arg("dirs"), py::arg("out"), "Write the report charts; returns (files, diagnostics).");

    m.def(
        "decode_frame",
        [](const py::bytes& data) {
            const std::string s = data;
            return frame_dict(decode_frame({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}));
        },
        py::arg("data"), "Decode exactly one wire frame into a dict.");

    m.def(
        "encode_bye",
        [](std::uint64_t step) { return to_py(encode_frame(ByeBody{Timestep{step}})); }, py::arg("step"));

    m.attr("PROTOCOL_VERSION") = kProtocolVersion;
}
