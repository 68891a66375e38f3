#include "adaptsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/fmt/fmt.h>

namespace adaptsim {

namespace fs = std::filesystem;

namespace {

template <class F>
auto read_file(const fs::path& p, F&& reader) {
    std::ifstream in(p);
    if (!in) {
        throw TraceError(p.string() + ": cannot open");
    }
    return reader(in, p.string());
}

std::uint64_t echo_u64(const RunSummary& s, const std::string& key) {
    const auto v = s.echo(key);
    if (!v) return 0;
    try {
        return std::stoull(*v);
    } catch (const std::exception&) {
        return 0;
    }
}

std::string echo_str(const RunSummary& s, const std::string& key, std::string fallback) {
    return s.echo(key).value_or(std::move(fallback));
}

// ---- svg ------------------------------------------------------------------

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// 1, 2 or 5 times a power of ten, giving about `target` intervals over span
double nice_step(double span, int target) {
    if (span <= 0) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) return m * mag;
    }
    return 10.0 * mag;
}

std::string tick_label(double v) {
    if (v != 0 && (std::fabs(v) >= 1e6 || std::fabs(v) < 1e-3)) return fmt::format("{:.2g}", v);
    return fmt::format("{:g}", v);
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
    bool markers = false;
    std::size_t color = 0;
};

class Plot {
public:
    Plot(std::string title, std::string xLabel, std::string yLabel)
        : title_(std::move(title)), xLabel_(std::move(xLabel)), yLabel_(std::move(yLabel)) {}

    void fix_y(double lo, double hi) { yFixed_ = {lo, hi}; }

    std::string lines(const std::vector<Series>& series) {
        double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
        for (const auto& s : series) {
            for (const auto& [x, y] : s.points) {
                x0 = std::min(x0, x); x1 = std::max(x1, x);
                y0 = std::min(y0, y); y1 = std::max(y1, y);
            }
        }
        if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
        if (yFixed_) { y0 = yFixed_->first; y1 = yFixed_->second; }
        else { y0 = std::min(0.0, y0); if (y1 <= y0) y1 = y0 + 1; }
        if (x1 <= x0) x1 = x0 + 1;
        begin(x0, x1, y0, y1, true);
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto& s = series[i];
            std::string d;
            for (const auto& [x, y] : s.points) {
                d += fmt::format("{}{:.2f},{:.2f} ", d.empty() ? "M" : "L", px(x), py(y));
            }
            if (!d.empty()) {
                body_ += fmt::format(R"(<path d="{}" fill="none" stroke="{}" stroke-width="1.5"{}/>)", d, color(s.color),
                                     s.dashed ? R"( stroke-dasharray="6,3")" : "");
                body_ += '\n';
            }
            if (s.markers) {
                for (const auto& [x, y] : s.points) {
                    body_ += fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="{}"/>)", px(x), py(y), color(s.color));
                    body_ += '\n';
                }
            }
        }
        legend(series);
        return finish();
    }

    // groups along x, one bar per series inside each group
    std::string bars(const std::vector<std::string>& groups, const std::vector<Series>& series) {
        double y1 = 0;
        for (const auto& s : series) {
            for (const auto& p : s.points) y1 = std::max(y1, p.second);
        }
        y1 = y1 > 0 ? y1 * 1.1 : 1.0;
        begin(0, static_cast<double>(groups.size()), 0, y1, false);
        const double groupW = kPlotW / std::max<std::size_t>(groups.size(), 1);
        const double barW = groupW * 0.8 / std::max<std::size_t>(series.size(), 1);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const double gx = kLeft + g * groupW;
            body_ += fmt::format(R"(<text x="{:.1f}" y="{}" text-anchor="middle" font-size="12">{}</text>)",
                                 gx + groupW / 2, kTop + kPlotH + 18, esc(groups[g]));
            body_ += '\n';
            for (std::size_t i = 0; i < series.size(); ++i) {
                for (const auto& [x, y] : series[i].points) {
                    if (static_cast<std::size_t>(x) != g) continue;
                    const double bx = gx + groupW * 0.1 + i * barW;
                    body_ += fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="{}"/>)", bx,
                                         py(y), barW * 0.9, kTop + kPlotH - py(y), color(series[i].color));
                    body_ += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle" font-size="10">{}</text>)",
                                         bx + barW * 0.45, py(y) - 3, tick_label(std::round(y * 10) / 10));
                    body_ += '\n';
                }
            }
        }
        legend(series);
        return finish();
    }

private:
    static constexpr double kW = 720, kH = 440, kLeft = 80, kTop = 40, kPlotW = 600, kPlotH = 330;

    double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * kPlotW; }
    double py(double y) const { return kTop + kPlotH - (y - y0_) / (y1_ - y0_) * kPlotH; }

    void begin(double x0, double x1, double y0, double y1, bool xTicks) {
        x0_ = x0; x1_ = x1; y0_ = y0; y1_ = y1;
        body_ += fmt::format(R"(<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>)", kW / 2, esc(title_));
        body_ += '\n';
        body_ += fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>)", kLeft, kTop, kPlotW,
                             kPlotH);
        body_ += '\n';
        const double ys = nice_step(y1 - y0, 6);
        for (double v = std::ceil(y0 / ys) * ys; v <= y1 + ys * 1e-9; v += ys) {
            body_ += fmt::format(R"(<line x1="{}" x2="{}" y1="{:.2f}" y2="{:.2f}" stroke="#ddd"/>)", kLeft, kLeft + kPlotW,
                                 py(v), py(v));
            body_ += fmt::format(R"(<text x="{}" y="{:.2f}" text-anchor="end" font-size="11">{}</text>)", kLeft - 6,
                                 py(v) + 4, tick_label(v));
            body_ += '\n';
        }
        if (xTicks) {
            const double xs = nice_step(x1 - x0, 8);
            for (double v = std::ceil(x0 / xs) * xs; v <= x1 + xs * 1e-9; v += xs) {
                body_ += fmt::format(R"(<text x="{:.2f}" y="{}" text-anchor="middle" font-size="11">{}</text>)", px(v),
                                     kTop + kPlotH + 16, tick_label(v));
                body_ += '\n';
            }
        }
        body_ += fmt::format(R"(<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>)", kLeft + kPlotW / 2,
                             kH - 8, esc(xLabel_));
        body_ += fmt::format(R"svg(<text x="18" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {})">{}</text>)svg",
                             kTop + kPlotH / 2, kTop + kPlotH / 2, esc(yLabel_));
        body_ += '\n';
    }

    // lower right: lines here tend to rise or sit mid-plot
    void legend(const std::vector<Series>& series) {
        if (series.empty()) return;
        std::size_t longest = 0;
        for (const auto& s : series) longest = std::max(longest, s.label.size());
        const double w = 46 + 6.2 * static_cast<double>(longest);
        const double h = 8 + 16 * static_cast<double>(series.size());
        const double x = kLeft + kPlotW - w - 8, y = kTop + kPlotH - h - 8;
        body_ += fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="white" fill-opacity="0.9" stroke="#999"/>)",
                             x, y, w, h);
        body_ += '\n';
        for (std::size_t i = 0; i < series.size(); ++i) {
            const double ly = y + 16 + 16 * static_cast<double>(i);
            body_ += fmt::format(R"(<line x1="{:.1f}" x2="{:.1f}" y1="{:.1f}" y2="{:.1f}" stroke="{}" stroke-width="3"{}/>)",
                                 x + 6, x + 26, ly - 4, ly - 4, color(series[i].color),
                                 series[i].dashed ? R"( stroke-dasharray="6,3")" : "");
            body_ += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="11">{}</text>)", x + 32, ly, esc(series[i].label));
            body_ += '\n';
        }
    }

    std::string finish() const {
        return fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">)"
                           "\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
                           kW, kH, kW, kH, body_);
    }

    std::string title_, xLabel_, yLabel_;
    std::optional<std::pair<double, double>> yFixed_;
    double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
    std::string body_;
};

std::string run_label(const LoadedTrace& t) {
    return fmt::format("{} N={}", echo_str(t.summary, "mode", "?"), echo_u64(t.summary, "num_mh"));
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) {
        throw TraceError(p.string() + ": write failed");
    }
}

// static first, then in the order the modes were introduced
int mode_rank(const std::string& m) {
    if (m == "static") return 0;
    if (m == "gaia") return 1;
    if (m == "gaia+") return 2;
    return 3;
}

} // namespace

LoadedTrace merge_lp_traces(const fs::path& dir, std::vector<std::vector<StepRecord>> perLp,
                            std::vector<RunSummary> lpSummaries) {
    if (perLp.empty() || perLp.size() != lpSummaries.size()) {
        throw TraceError(dir.string() + ": no per-LP traces to merge");
    }
    std::uint64_t steps = lpSummaries[0].steps;
    for (const auto& r : perLp) {
        if (r.size() != steps + 1) {
            throw TraceError(dir.string() + ": per-LP traces cover different step counts");
        }
    }
    double wct = 0;
    for (const auto& s : lpSummaries) wct = std::max(wct, s.wctSeconds);
    LoadedTrace t;
    t.dir = dir;
    t.steps = merge_lp_records(perLp, steps);
    t.summary = summarize(t.steps, wct, lpSummaries[0].config);
    return t;
}

std::optional<LoadedTrace> load_trace(const fs::path& dir, std::vector<std::string>& diagnostics) {
    try {
        if (!fs::is_directory(dir)) {
            diagnostics.push_back(dir.string() + ": not a directory");
            return std::nullopt;
        }
        if (fs::exists(dir / "steps.csv") || fs::exists(dir / "summary.csv")) {
            LoadedTrace t;
            t.dir = dir;
            t.steps = read_file(dir / "steps.csv", read_steps_csv);
            t.summary = read_file(dir / "summary.csv", read_summary_csv);
            if (t.steps.size() != t.summary.steps) {
                diagnostics.push_back(fmt::format("{}: steps.csv has {} rows, summary.csv says {} steps",
                                                  dir.string(), t.steps.size(), t.summary.steps));
            }
            return t;
        }
        std::vector<std::vector<StepRecord>> perLp;
        std::vector<RunSummary> sums;
        for (std::uint32_t k = 0;; ++k) {
            const fs::path sub = dir / ("lp" + std::to_string(k));
            if (!fs::is_directory(sub)) break;
            perLp.push_back(read_file(sub / "lp_steps.csv", read_lp_steps_csv));
            sums.push_back(read_file(sub / "lp_summary.csv", read_summary_csv));
        }
        if (perLp.empty()) {
            diagnostics.push_back(dir.string() + ": no steps.csv and no lp<k>/ subdirectories");
            return std::nullopt;
        }
        return merge_lp_traces(dir, std::move(perLp), std::move(sums));
    } catch (const std::exception& e) {
        diagnostics.push_back(e.what());
        return std::nullopt;
    }
}

std::vector<GainRow> gain_table(const std::vector<LoadedTrace>& traces) {
    std::vector<GainRow> rows;
    std::map<std::uint64_t, double> staticWct;
    for (const auto& t : traces) {
        GainRow r;
        r.numMh = echo_u64(t.summary, "num_mh");
        r.mode = echo_str(t.summary, "mode", "?");
        r.wctSeconds = t.summary.wctSeconds;
        r.avgLcr = t.summary.avgLcr;
        r.migrations = t.summary.totalMigrations;
        if (r.mode == "static" && !staticWct.count(r.numMh)) staticWct[r.numMh] = r.wctSeconds;
        rows.push_back(r);
    }
    for (auto& r : rows) {
        if (const auto it = staticWct.find(r.numMh); it != staticWct.end()) {
            r.gainPercent = gain_percent(it->second, r.wctSeconds);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const GainRow& a, const GainRow& b) {
        if (a.numMh != b.numMh) return a.numMh < b.numMh;
        return mode_rank(a.mode) < mode_rank(b.mode);
    });
    return rows;
}

std::string format_gain_table(const std::vector<GainRow>& rows) {
    std::string out = fmt::format("{:>8}  {:<8}  {:>12}  {:>8}  {:>8}  {:>10}\n", "N", "mode", "WCT [s]", "gain %",
                                  "avg LCR", "migrations");
    for (const auto& r : rows) {
        out += fmt::format("{:>8}  {:<8}  {:>12.3f}  {:>8}  {:>8}  {:>10}\n", r.numMh, r.mode, r.wctSeconds,
                           r.gainPercent ? fmt::format("{:.2f}", *r.gainPercent) : "-",
                           r.avgLcr ? fmt::format("{:.3f}", *r.avgLcr) : "-", r.migrations);
    }
    return out;
}

ReportOutput render_report(const std::vector<fs::path>& dirs, const fs::path& outDir) {
    ReportOutput out;
    std::vector<LoadedTrace> traces;
    for (const auto& d : dirs) {
        if (auto t = load_trace(d, out.diagnostics)) traces.push_back(std::move(*t));
    }
    out.tracesLoaded = traces.size();
    if (traces.empty()) {
        return out;
    }
    fs::create_directories(outDir);
    auto emit = [&](const std::string& name, const std::string& text) {
        write_text(outDir / name, text);
        out.files.push_back(outDir / name);
    };

    std::map<std::string, std::vector<const LoadedTrace*>> byMode;
    for (const auto& t : traces) byMode[echo_str(t.summary, "mode", "?")].push_back(&t);
    std::vector<std::string> modes;
    for (const auto& [m, _] : byMode) modes.push_back(m);
    std::sort(modes.begin(), modes.end(), [](const auto& a, const auto& b) { return mode_rank(a) < mode_rank(b); });

    if (traces.size() >= 2) {
        std::vector<Series> msg;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            Series s{modes[i], {}, false, true, i};
            for (const auto* t : byMode[modes[i]]) {
                s.points.emplace_back(static_cast<double>(echo_u64(t->summary, "num_mh")),
                                      static_cast<double>(t->summary.totalInteractions));
            }
            std::sort(s.points.begin(), s.points.end());
            msg.push_back(std::move(s));
        }
        emit("messages.svg", Plot("Delivered interactions vs number of hosts", "N (mobile hosts)", "interactions")
                                 .lines(msg));

        std::set<std::uint64_t> sizes;
        for (const auto& t : traces) sizes.insert(echo_u64(t.summary, "num_mh"));
        std::vector<std::string> groups;
        std::map<std::uint64_t, std::size_t> groupOf;
        for (auto n : sizes) {
            groupOf[n] = groups.size();
            groups.push_back("N=" + std::to_string(n));
        }
        // repeated runs of one (N, mode), e.g. several seeds, show as their mean
        std::vector<Series> wct;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            std::map<std::size_t, std::pair<double, int>> acc;
            for (const auto* t : byMode[modes[i]]) {
                auto& a = acc[groupOf[echo_u64(t->summary, "num_mh")]];
                a.first += t->summary.wctSeconds;
                ++a.second;
            }
            Series s{modes[i], {}, false, false, i};
            for (const auto& [g, a] : acc) s.points.emplace_back(static_cast<double>(g), a.first / a.second);
            wct.push_back(std::move(s));
        }
        emit("wct.svg", Plot("Wall clock time per mode", "", "WCT [s]").bars(groups, wct));
    }

    std::map<std::string, int> labelUses;
    for (const auto& t : traces) ++labelUses[run_label(t)];
    auto label = [&](const LoadedTrace& t) {
        const std::string l = run_label(t);
        return labelUses[l] > 1 ? l + " [" + t.dir.filename().string() + "]" : l;
    };
    std::vector<Series> lcrSeries;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& t = traces[i];
        Series per{label(t), {}, false, false, i};
        Series avg{label(t) + " running avg", {}, true, false, i};
        double sum = 0;
        std::uint64_t count = 0;
        for (const auto& row : t.steps) {
            if (const auto v = row.lcr()) {
                per.points.emplace_back(static_cast<double>(row.step), *v);
                sum += *v;
                ++count;
                avg.points.emplace_back(static_cast<double>(row.step), sum / count);
            }
        }
        lcrSeries.push_back(std::move(per));
        lcrSeries.push_back(std::move(avg));
    }
    Plot lcrPlot("Local communication ratio per step", "step", "LCR");
    lcrPlot.fix_y(0, 1);
    emit("lcr.svg", lcrPlot.lines(lcrSeries));

    // the allocation chart is only interesting for an adaptive run
    const LoadedTrace* alloc = &traces.front();
    for (const auto& t : traces) {
        if (echo_str(t.summary, "mode", "static") != "static") {
            alloc = &t;
            break;
        }
    }
    std::vector<Series> allocSeries;
    const std::size_t numLps = alloc->steps.empty() ? 0 : alloc->steps.front().seCount.size();
    for (std::size_t k = 0; k < numLps; ++k) {
        Series s{"LP" + std::to_string(k), {}, false, false, k};
        for (const auto& row : alloc->steps) {
            s.points.emplace_back(static_cast<double>(row.step), static_cast<double>(row.seCount.at(k)));
        }
        allocSeries.push_back(std::move(s));
    }
    emit("allocation.svg", Plot("Entities per LP (" + label(*alloc) + ")", "step", "entities").lines(allocSeries));

    std::string text = format_gain_table(gain_table(traces));
    text += "\n";
    for (const auto& t : traces) {
        text += fmt::format("{}: {} steps, final LCR {}, {} interactions, {} pings\n", t.dir.string(), t.summary.steps,
                            t.summary.finalLcr ? fmt::format("{:.3f}", *t.summary.finalLcr) : "-",
                            t.summary.totalInteractions, t.summary.totalPings);
    }
    for (const auto& d : out.diagnostics) text += "warning: " + d + "\n";
    emit("report.txt", text);
    return out;
}

} // namespace adaptsim
