#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "adaptsim/ids.hpp"
#include "adaptsim/rng.hpp"

namespace adaptsim {

/// Virtual time in nanoseconds.
using VirtualNanos = std::int64_t;

struct LinkProfile {
    double latencyMs = 0.0;                 // one-way mean latency
    double jitterMs = 0.0;                  // uniform +/- around the mean
    std::optional<double> bandwidthMbps;    // nullopt = unlimited
};

class ProfileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-directed-link latency/jitter/bandwidth plus per-LP CPU slowdown.
/// Links that are not listed behave as ideal (zero latency, unlimited bandwidth);
/// LPs that are not listed run at slowdown 1.
class NetProfile {
public:
    NetProfile() = default;

    static NetProfile parse(std::istream& in, const std::string& sourceName = "<profile>");
    static NetProfile load(const std::filesystem::path& path);

    const LinkProfile& link(LpId from, LpId to) const;
    double cpu_slowdown(LpId lp) const;

    void set_link(LpId from, LpId to, LinkProfile profile);
    void set_cpu_slowdown(LpId lp, double factor);

    /// Throws ProfileError if any entry names an LP outside [0, numLps).
    void check_lp_range(std::uint32_t numLps) const;

private:
    std::map<std::pair<std::uint32_t, std::uint32_t>, LinkProfile> links_;
    std::map<std::uint32_t, double> slowdown_;
};

/// Delivery time of a frame on one directed link, ignoring FIFO ordering:
/// sendTime + frameBits / bandwidth + latency + jitterUnit * jitter, with jitterUnit in [-1, 1].
/// Never earlier than sendTime plus the serialization delay.
VirtualNanos sim_link_deliver(const NetProfile& profile, LpId from, LpId to, std::size_t frameBytes, VirtualNanos sendTime,
                              double jitterUnit = 0.0);

/// Simulated reliable network: per-link FIFO on top of sim_link_deliver, jitter drawn from
/// a seeded SplitMix64 stream so delivery schedules are reproducible.
class SimNetwork {
public:
    SimNetwork(NetProfile profile, std::uint64_t seed);

    VirtualNanos schedule(LpId from, LpId to, std::size_t frameBytes, VirtualNanos sendTime);

    const NetProfile& profile() const { return profile_; }

private:
    NetProfile profile_;
    RngStream jitter_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, VirtualNanos> lastDelivery_;
};

} // namespace adaptsim
