#include "adaptsim/net_profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace adaptsim {

namespace pt = boost::property_tree;

namespace {

const LinkProfile kIdealLink{};

double parse_number(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw ProfileError(where + ": expected a number, got '" + text + "'");
    }
}

std::uint32_t parse_lp(const std::string& text, const std::string& where) {
    const double v = parse_number(text, where);
    if (v < 0 || v != std::floor(v) || v > 1e9) {
        throw ProfileError(where + ": expected an LP index, got '" + text + "'");
    }
    return static_cast<std::uint32_t>(v);
}

} // namespace

NetProfile NetProfile::parse(std::istream& in, const std::string& sourceName) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ProfileError(sourceName + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    NetProfile profile;
    for (const auto& [section, body] : tree) {
        std::istringstream words(section);
        std::string head;
        words >> head;
        const std::string where = sourceName + " [" + section + "]";
        if (body.data().size() && body.empty()) {
            throw ProfileError(sourceName + ": key '" + section + "' outside of any section");
        }
        if (head == "link") {
            std::string a, b, extra;
            if (!(words >> a >> b) || (words >> extra)) {
                throw ProfileError(where + ": expected [link <from> <to>]");
            }
            const std::uint32_t from = parse_lp(a, where);
            const std::uint32_t to = parse_lp(b, where);
            if (from == to) {
                throw ProfileError(where + ": a link needs two distinct LPs");
            }
            LinkProfile link;
            for (const auto& [key, value] : body) {
                const std::string& v = value.data();
                if (key == "latency_ms") {
                    link.latencyMs = parse_number(v, where + " latency_ms");
                } else if (key == "jitter_ms") {
                    link.jitterMs = parse_number(v, where + " jitter_ms");
                } else if (key == "bandwidth_mbps") {
                    if (v == "unlimited") {
                        link.bandwidthMbps.reset();
                    } else {
                        link.bandwidthMbps = parse_number(v, where + " bandwidth_mbps");
                        if (*link.bandwidthMbps <= 0) {
                            throw ProfileError(where + ": bandwidth_mbps must be positive or 'unlimited'");
                        }
                    }
                } else {
                    throw ProfileError(where + ": unknown key '" + key + "'");
                }
            }
            if (link.latencyMs < 0 || link.jitterMs < 0) {
                throw ProfileError(where + ": latency and jitter must be >= 0");
            }
            profile.set_link(LpId{from}, LpId{to}, link);
        } else if (head == "lp") {
            std::string a, extra;
            if (!(words >> a) || (words >> extra)) {
                throw ProfileError(where + ": expected [lp <id>]");
            }
            const std::uint32_t lp = parse_lp(a, where);
            for (const auto& [key, value] : body) {
                if (key != "cpu_slowdown") {
                    throw ProfileError(where + ": unknown key '" + key + "'");
                }
                const double factor = parse_number(value.data(), where + " cpu_slowdown");
                if (factor < 1.0) {
                    throw ProfileError(where + ": cpu_slowdown must be >= 1");
                }
                profile.set_cpu_slowdown(LpId{lp}, factor);
            }
        } else {
            throw ProfileError(where + ": unknown section");
        }
    }
    return profile;
}

NetProfile NetProfile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ProfileError("cannot open profile file '" + path.string() + "'");
    }
    return parse(in, path.string());
}

const LinkProfile& NetProfile::link(LpId from, LpId to) const {
    auto it = links_.find({from.value, to.value});
    return it == links_.end() ? kIdealLink : it->second;
}

double NetProfile::cpu_slowdown(LpId lp) const {
    auto it = slowdown_.find(lp.value);
    return it == slowdown_.end() ? 1.0 : it->second;
}

void NetProfile::set_link(LpId from, LpId to, LinkProfile profile) { links_[{from.value, to.value}] = profile; }

void NetProfile::set_cpu_slowdown(LpId lp, double factor) { slowdown_[lp.value] = factor; }

void NetProfile::check_lp_range(std::uint32_t numLps) const {
    for (const auto& [key, _] : links_) {
        if (key.first >= numLps || key.second >= numLps) {
            throw ProfileError("profile link " + std::to_string(key.first) + "->" + std::to_string(key.second) +
                               " names an LP outside 0.." + std::to_string(numLps - 1));
        }
    }
    for (const auto& [lp, _] : slowdown_) {
        if (lp >= numLps) {
            throw ProfileError("profile [lp " + std::to_string(lp) + "] is outside 0.." + std::to_string(numLps - 1));
        }
    }
}

VirtualNanos sim_link_deliver(const NetProfile& profile, LpId from, LpId to, std::size_t frameBytes, VirtualNanos sendTime,
                              double jitterUnit) {
    const LinkProfile& link = profile.link(from, to);
    VirtualNanos serialization = 0;
    if (link.bandwidthMbps) {
        // bits / (Mbit/s) = microseconds; * 1000 for nanoseconds
        serialization = std::llround(static_cast<double>(frameBytes) * 8.0 * 1000.0 / *link.bandwidthMbps);
    }
    const double latencyNs = (link.latencyMs + std::clamp(jitterUnit, -1.0, 1.0) * link.jitterMs) * 1e6;
    const VirtualNanos propagation = std::max<VirtualNanos>(0, std::llround(latencyNs));
    return sendTime + serialization + propagation;
}

SimNetwork::SimNetwork(NetProfile profile, std::uint64_t seed)
    : profile_(std::move(profile)), jitter_(splitmix_fold(seed, 0x6A1773E7ULL)) {}

VirtualNanos SimNetwork::schedule(LpId from, LpId to, std::size_t frameBytes, VirtualNanos sendTime) {
    double unit = 0.0;
    if (profile_.link(from, to).jitterMs > 0) {
        unit = jitter_.uniform(-1.0, 1.0);
    }
    VirtualNanos at = sim_link_deliver(profile_, from, to, frameBytes, sendTime, unit);
    auto& last = lastDelivery_[{from.value, to.value}];
    at = std::max(at, last);
    last = at;
    return at;
}

} // namespace adaptsim
