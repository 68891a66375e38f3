#include "adaptsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace adaptsim {

namespace pt = boost::property_tree;

const char* to_string(RunMode mode) {
    switch (mode) {
    case RunMode::Sim: return "sim";
    case RunMode::Tcp: return "tcp";
    case RunMode::Threads: return "threads";
    }
    return "?";
}

namespace {

template <class T>
T parse_int(const std::string& text, const std::string& key) {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
    }
    return v;
}

double parse_real(const std::string& text, const std::string& key) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
    return v;
}

std::chrono::milliseconds parse_seconds(const std::string& text, const std::string& key) {
    const double s = parse_real(text, key);
    if (s <= 0) {
        throw ConfigError(key + ": must be positive");
    }
    return std::chrono::milliseconds{static_cast<std::int64_t>(std::llround(s * 1000.0))};
}

using Setter = std::function<void(const std::string& value, const std::string& key)>;

template <class T>
Setter integer(T& slot) {
    return [&slot](const std::string& v, const std::string& k) { slot = parse_int<T>(v, k); };
}

Setter real(double& slot) {
    return [&slot](const std::string& v, const std::string& k) { slot = parse_real(v, k); };
}

} // namespace

ConfigEcho RunConfig::echo() const {
    const auto& m = engine.model;
    const auto& h = engine.heuristics;
    auto num = [](double v) {
        char buf[32];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, end);
    };
    return {
        {"mode", to_string(h.mode)},
        {"run_mode", to_string(mode)},
        {"num_lps", std::to_string(engine.numLps)},
        {"num_mh", std::to_string(m.numMh)},
        {"global_seed", std::to_string(engine.globalSeed)},
        {"radius", num(m.radius)},
        {"fraction", num(m.broadcastFraction)},
        {"threshold", num(h.threshold)},
        {"window", std::to_string(h.window)},
        {"eval_interval", std::to_string(h.evalInterval)},
        {"profile", profilePath ? profilePath->filename().string() : std::string("ideal")},
    };
}

RunConfig parse_config(std::istream& in, const std::string& sourceName, const std::vector<std::string>& overrides,
                       const std::filesystem::path& baseDir) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(sourceName + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    struct Entry {
        std::string section, key, value, origin;
    };
    std::vector<Entry> entries;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError(sourceName + ": key '" + section + "' outside of any section");
        }
        for (const auto& [key, value] : body) {
            entries.push_back({section, key, value.data(), sourceName});
        }
    }
    // overrides come last so they win
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
            throw ConfigError("override '" + o + "' is not section.key=value");
        }
        entries.push_back({o.substr(0, dot), o.substr(dot + 1, eq - dot - 1), o.substr(eq + 1), "override"});
    }

    RunConfig c;
    std::optional<std::uint64_t> modelSeed, runSeed;
    std::optional<std::string> profile;

    std::map<std::string, Setter> table;
    auto& m = c.engine.model;
    auto& h = c.engine.heuristics;
    auto& cost = c.engine.cost;
    table["model.num_mh"] = integer(m.numMh);
    table["model.steps"] = integer(m.steps);
    table["model.radius"] = real(m.radius);
    table["model.fraction"] = real(m.broadcastFraction);
    table["model.speed_min"] = real(m.speedMin);
    table["model.speed_max"] = real(m.speedMax);
    table["model.waypoint_eps"] = real(m.waypointArrivalEps);
    table["model.arena_w"] = real(m.arena.width);
    table["model.arena_h"] = real(m.arena.height);
    table["model.seed"] = [&](const std::string& v, const std::string& k) { modelSeed = parse_int<std::uint64_t>(v, k); };

    table["heuristics.mode"] = [&](const std::string& v, const std::string& k) {
        const auto mode = parse_mode(v);
        if (!mode) throw ConfigError(k + ": expected static, gaia or gaia+, got '" + v + "'");
        h.mode = *mode;
    };
    table["heuristics.window"] = integer(h.window);
    table["heuristics.eval_interval"] = integer(h.evalInterval);
    table["heuristics.threshold"] = real(h.threshold);
    table["heuristics.migration_factor"] = integer(h.migrationFactor);
    table["heuristics.tolerance"] = real(h.tolerance);
    table["heuristics.cooldown"] = integer(h.cooldown);
    table["heuristics.slowdown_trigger"] = real(h.slowdownTrigger);
    table["heuristics.quota_fraction"] = real(h.quotaFraction);
    table["heuristics.ema_alpha"] = real(h.emaAlpha);
    table["heuristics.lag_weight"] = real(h.lagWeight);

    table["run.mode"] = [&](const std::string& v, const std::string& k) {
        if (v == "sim") c.mode = RunMode::Sim;
        else if (v == "tcp") c.mode = RunMode::Tcp;
        else if (v == "threads") c.mode = RunMode::Threads;
        else throw ConfigError(k + ": expected sim, tcp or threads, got '" + v + "'");
    };
    table["run.num_lps"] = integer(c.engine.numLps);
    table["run.global_seed"] = [&](const std::string& v, const std::string& k) { runSeed = parse_int<std::uint64_t>(v, k); };
    table["run.network_seed"] = integer(c.networkSeed);
    table["run.trace_dir"] = [&](const std::string& v, const std::string&) { c.traceDir = v; };
    table["run.barrier_timeout_s"] = [&](const std::string& v, const std::string& k) { c.barrierTimeout = parse_seconds(v, k); };
    table["run.connect_retries"] = integer(c.connectRetries);
    table["run.connect_backoff_s"] = [&](const std::string& v, const std::string& k) { c.connectBackoff = parse_seconds(v, k); };

    table["net.profile"] = [&](const std::string& v, const std::string&) { profile = v; };
    table["net.this_lp"] = [&](const std::string& v, const std::string& k) { c.thisLp = parse_int<std::uint32_t>(v, k); };

    table["cost.se_update_ns"] = integer(cost.seUpdate);
    table["cost.broadcast_ns"] = integer(cost.broadcast);
    table["cost.frame_out_ns"] = integer(cost.frameOut);
    table["cost.frame_in_ns"] = integer(cost.frameIn);
    table["cost.local_delivery_ns"] = integer(cost.localDelivery);
    table["cost.remote_delivery_ns"] = integer(cost.remoteDelivery);
    table["cost.migration_ns"] = integer(cost.migration);

    std::map<std::uint32_t, std::string> peers;
    for (const auto& e : entries) {
        const std::string full = e.section + "." + e.key;
        if (e.section == "peers") {
            peers[parse_int<std::uint32_t>(e.key, e.origin + " [peers] key")] = e.value;
            continue;
        }
        const auto it = table.find(full);
        if (it == table.end()) {
            throw ConfigError(e.origin + ": unknown key '" + full + "'");
        }
        it->second(e.value, e.origin + " " + full);
    }

    if (modelSeed && runSeed && *modelSeed != *runSeed) {
        throw ConfigError(sourceName + ": model.seed (" + std::to_string(*modelSeed) + ") and run.global_seed (" +
                          std::to_string(*runSeed) + ") disagree");
    }
    c.engine.globalSeed = runSeed.value_or(modelSeed.value_or(c.engine.globalSeed));

    try {
        c.engine.model.validate();
        c.engine.heuristics.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(sourceName + ": " + e.what());
    }
    if (c.engine.numLps == 0) {
        throw ConfigError(sourceName + ": run.num_lps must be >= 1");
    }
    if (c.engine.numLps > c.engine.model.numMh) {
        throw ConfigError(sourceName + ": run.num_lps exceeds model.num_mh; every LP needs an entity");
    }

    for (std::uint32_t k = 0; k < peers.size(); ++k) {
        if (!peers.count(k)) {
            throw ConfigError(sourceName + " [peers]: entries must be numbered 0.." + std::to_string(peers.size() - 1));
        }
        c.peers.push_back(peers[k]);
    }
    if (c.mode == RunMode::Tcp) {
        if (c.peers.size() != c.engine.numLps) {
            throw ConfigError(sourceName + ": tcp mode needs " + std::to_string(c.engine.numLps) + " [peers] entries, found " +
                              std::to_string(c.peers.size()));
        }
        if (c.thisLp && *c.thisLp >= c.engine.numLps) {
            throw ConfigError(sourceName + ": net.this_lp " + std::to_string(*c.thisLp) + " outside [0, " +
                              std::to_string(c.engine.numLps) + ")");
        }
    }

    if (profile) {
        std::filesystem::path p(*profile);
        if (p.is_relative() && !baseDir.empty()) {
            p = baseDir / p;
        }
        if (!std::filesystem::exists(p)) {
            throw ConfigError(sourceName + ": profile file '" + p.string() + "' does not exist");
        }
        try {
            c.profile = NetProfile::load(p);
            c.profile.check_lp_range(c.engine.numLps);
        } catch (const ProfileError& e) {
            throw ConfigError(e.what());
        }
        c.profilePath = p;
    }
    c.networkSeed = c.networkSeed ? c.networkSeed : c.engine.globalSeed;
    return c;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    return parse_config(in, path.string(), overrides, path.parent_path());
}

} // namespace adaptsim
