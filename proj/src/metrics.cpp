#include "adaptsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace adaptsim {

std::optional<double> lcr(std::uint64_t local, std::uint64_t remote) {
    const std::uint64_t total = local + remote;
    if (total == 0) {
        return std::nullopt;
    }
    return static_cast<double>(local) / static_cast<double>(total);
}

std::optional<std::string> RunSummary::echo(const std::string& key) const {
    for (const auto& [k, v] : config) {
        if (k == key) return v;
    }
    return std::nullopt;
}

std::vector<StepTrace> merge_lp_records(std::span<const std::vector<StepRecord>> perLp, std::uint64_t steps) {
    const auto numLps = static_cast<std::uint32_t>(perLp.size());
    std::vector<StepTrace> out;
    out.reserve(steps);
    for (std::uint64_t t = 1; t <= steps; ++t) {
        StepTrace row;
        row.step = t;
        row.seCount.assign(numLps, 0);
        row.busyNanos.assign(numLps, 0);
        for (std::uint32_t k = 0; k < numLps; ++k) {
            if (perLp[k].size() <= t) {
                throw TraceError("LP " + std::to_string(k) + " has no record for step " + std::to_string(t));
            }
            const StepRecord& r = perLp[k][t];
            row.local += r.local;
            row.remote += r.remote;
            row.pings += r.pings;
            row.seCount[k] = r.seCount;
            row.busyNanos[k] = r.busyNanos;
            row.wallNanos = std::max(row.wallNanos, r.wallNanos);
            row.digest ^= r.digest;
            if (k == 0) {
                row.migrations = r.migrations;
            } else if (r.migrations != row.migrations) {
                throw TraceError("LPs disagree on the migrations of step " + std::to_string(t) + ": " +
                                 std::to_string(row.migrations) + " vs " + std::to_string(r.migrations));
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

RunSummary summarize(std::span<const StepTrace> steps, double wctSeconds, ConfigEcho config) {
    RunSummary s;
    s.wctSeconds = wctSeconds;
    s.steps = steps.size();
    s.config = std::move(config);
    double sum = 0.0;
    std::uint64_t defined = 0;
    for (const auto& row : steps) {
        s.totalInteractions += row.local + row.remote;
        s.totalPings += row.pings;
        s.totalMigrations += row.migrations;
        if (const auto v = row.lcr()) {
            sum += *v;
            ++defined;
        }
    }
    if (defined > 0) {
        s.avgLcr = sum / static_cast<double>(defined);
    }
    if (!steps.empty()) {
        s.finalLcr = steps.back().lcr();
    }
    return s;
}

double gain_percent(double staticWct, double modeWct) {
    if (!(staticWct > 0)) {
        return 0.0;
    }
    return (staticWct - modeWct) / staticWct * 100.0;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    auto [end, ec] = std::to_chars(buf, buf + 16, v, 16);
    std::string s(buf, end);
    return std::string(16 - s.size(), '0') + s;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, end);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

/// Header-indexed CSV reader with diagnostics naming file, line and column.
class CsvTable {
public:
    CsvTable(std::istream& in, std::string name) : name_(std::move(name)) {
        std::string line;
        if (!std::getline(in, line)) {
            throw TraceError(name_ + ": empty file");
        }
        header_ = split_row(line);
        std::size_t lineNo = 1;
        while (std::getline(in, line)) {
            ++lineNo;
            if (line.empty() || line == "\r") continue;
            auto row = split_row(line);
            if (row.size() != header_.size()) {
                throw TraceError(name_ + ":" + std::to_string(lineNo) + ": expected " + std::to_string(header_.size()) +
                                 " fields, got " + std::to_string(row.size()));
            }
            rows_.push_back(std::move(row));
            lines_.push_back(lineNo);
        }
    }

    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }

    std::optional<std::size_t> find(const std::string& column) const {
        auto it = std::find(header_.begin(), header_.end(), column);
        if (it == header_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header_.begin());
    }

    std::size_t column(const std::string& name) const {
        if (auto c = find(name)) return *c;
        throw TraceError(name_ + ": missing column '" + name + "'");
    }

    const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }

    template <class T>
    T number(std::size_t row, std::size_t col, int base = 10) const {
        const std::string& s = rows_[row][col];
        T v{};
        std::from_chars_result r;
        if constexpr (std::is_floating_point_v<T>) {
            r = std::from_chars(s.data(), s.data() + s.size(), v);
        } else {
            r = std::from_chars(s.data(), s.data() + s.size(), v, base);
        }
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
            throw TraceError(name_ + ":" + std::to_string(lines_[row]) + ": bad value '" + s + "' in column '" +
                             header_[col] + "'");
        }
        return v;
    }

    std::optional<double> optional_number(std::size_t row, std::size_t col) const {
        if (rows_[row][col].empty()) return std::nullopt;
        return number<double>(row, col);
    }

private:
    std::string name_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> lines_;
};

const std::vector<std::string> kSummaryColumns = {"wct_s",  "steps",       "avg_lcr",         "final_lcr",
                                                  "total_interactions", "total_pings", "total_migrations"};

} // namespace

void write_steps_csv(std::ostream& out, std::span<const StepTrace> steps, std::uint32_t numLps) {
    out << "step,local,remote,pings,lcr,migrations";
    for (std::uint32_t k = 0; k < numLps; ++k) out << ",se_count_lp" << k;
    for (std::uint32_t k = 0; k < numLps; ++k) out << ",busy_ns_lp" << k;
    out << ",wall_ns,digest\n";
    for (const auto& row : steps) {
        out << row.step << ',' << row.local << ',' << row.remote << ',' << row.pings << ',' << fmt_opt(row.lcr()) << ','
            << row.migrations;
        for (std::uint32_t k = 0; k < numLps; ++k) out << ',' << row.seCount.at(k);
        for (std::uint32_t k = 0; k < numLps; ++k) out << ',' << row.busyNanos.at(k);
        out << ',' << row.wallNanos << ',' << hex64(row.digest) << '\n';
    }
}

std::vector<StepTrace> read_steps_csv(std::istream& in, const std::string& name) {
    CsvTable t(in, name);
    std::uint32_t numLps = 0;
    while (t.find("se_count_lp" + std::to_string(numLps))) ++numLps;
    const auto cStep = t.column("step"), cLocal = t.column("local"), cRemote = t.column("remote"),
               cPings = t.column("pings"), cMig = t.column("migrations"), cWall = t.column("wall_ns"),
               cDigest = t.column("digest");
    std::vector<std::size_t> cCount, cBusy;
    for (std::uint32_t k = 0; k < numLps; ++k) {
        cCount.push_back(t.column("se_count_lp" + std::to_string(k)));
        cBusy.push_back(t.column("busy_ns_lp" + std::to_string(k)));
    }
    std::vector<StepTrace> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        StepTrace row;
        row.step = t.number<std::uint64_t>(r, cStep);
        row.local = t.number<std::uint64_t>(r, cLocal);
        row.remote = t.number<std::uint64_t>(r, cRemote);
        row.pings = t.number<std::uint64_t>(r, cPings);
        row.migrations = t.number<std::uint64_t>(r, cMig);
        for (std::uint32_t k = 0; k < numLps; ++k) {
            row.seCount.push_back(t.number<std::uint32_t>(r, cCount[k]));
            row.busyNanos.push_back(t.number<std::uint64_t>(r, cBusy[k]));
        }
        row.wallNanos = t.number<std::int64_t>(r, cWall);
        row.digest = t.number<std::uint64_t>(r, cDigest, 16);
        out.push_back(std::move(row));
    }
    return out;
}

void write_summary_csv(std::ostream& out, const RunSummary& s) {
    for (std::size_t i = 0; i < kSummaryColumns.size(); ++i) {
        out << (i ? "," : "") << kSummaryColumns[i];
    }
    for (const auto& [k, v] : s.config) out << ',' << quote(k);
    out << '\n';
    out << fmt_double(s.wctSeconds) << ',' << s.steps << ',' << fmt_opt(s.avgLcr) << ',' << fmt_opt(s.finalLcr) << ','
        << s.totalInteractions << ',' << s.totalPings << ',' << s.totalMigrations;
    for (const auto& [k, v] : s.config) out << ',' << quote(v);
    out << '\n';
}

RunSummary read_summary_csv(std::istream& in, const std::string& name) {
    CsvTable t(in, name);
    if (t.rows() != 1) {
        throw TraceError(name + ": expected exactly one data row, got " + std::to_string(t.rows()));
    }
    RunSummary s;
    s.wctSeconds = t.number<double>(0, t.column("wct_s"));
    s.steps = t.number<std::uint64_t>(0, t.column("steps"));
    s.avgLcr = t.optional_number(0, t.column("avg_lcr"));
    s.finalLcr = t.optional_number(0, t.column("final_lcr"));
    s.totalInteractions = t.number<std::uint64_t>(0, t.column("total_interactions"));
    s.totalPings = t.number<std::uint64_t>(0, t.column("total_pings"));
    s.totalMigrations = t.number<std::uint64_t>(0, t.column("total_migrations"));
    for (std::size_t c = 0; c < t.header().size(); ++c) {
        if (std::find(kSummaryColumns.begin(), kSummaryColumns.end(), t.header()[c]) == kSummaryColumns.end()) {
            s.config.emplace_back(t.header()[c], t.cell(0, c));
        }
    }
    return s;
}

void write_lp_steps_csv(std::ostream& out, std::span<const StepRecord> records, std::uint64_t steps) {
    out << "step,local,remote,pings,migrations,se_count,busy_ns,wall_ns,digest\n";
    for (std::uint64_t t = 1; t <= steps && t < records.size(); ++t) {
        const auto& r = records[t];
        out << t << ',' << r.local << ',' << r.remote << ',' << r.pings << ',' << r.migrations << ',' << r.seCount << ','
            << r.busyNanos << ',' << r.wallNanos << ',' << hex64(r.digest) << '\n';
    }
}

std::vector<StepRecord> read_lp_steps_csv(std::istream& in, const std::string& name) {
    CsvTable t(in, name);
    const auto cStep = t.column("step"), cLocal = t.column("local"), cRemote = t.column("remote"),
               cPings = t.column("pings"), cMig = t.column("migrations"), cCount = t.column("se_count"),
               cBusy = t.column("busy_ns"), cWall = t.column("wall_ns"), cDigest = t.column("digest");
    std::vector<StepRecord> out(1);
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (t.number<std::uint64_t>(r, cStep) != out.size()) {
            throw TraceError(name + ": steps are not consecutive from 1");
        }
        StepRecord rec;
        rec.local = t.number<std::uint64_t>(r, cLocal);
        rec.remote = t.number<std::uint64_t>(r, cRemote);
        rec.pings = t.number<std::uint64_t>(r, cPings);
        rec.migrations = t.number<std::uint64_t>(r, cMig);
        rec.seCount = t.number<std::uint32_t>(r, cCount);
        rec.busyNanos = t.number<std::uint64_t>(r, cBusy);
        rec.wallNanos = t.number<std::int64_t>(r, cWall);
        rec.digest = t.number<std::uint64_t>(r, cDigest, 16);
        out.push_back(rec);
    }
    return out;
}

} // namespace adaptsim
