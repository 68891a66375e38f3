#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptsim/metrics.hpp"
#include "adaptsim/net_profile.hpp"
#include "adaptsim/sync.hpp"

namespace adaptsim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RunMode : std::uint8_t { Sim, Tcp, Threads };

const char* to_string(RunMode mode);

struct RunConfig {
    EngineConfig engine;
    RunMode mode = RunMode::Sim;
    std::filesystem::path traceDir;                 // empty: no traces
    std::chrono::milliseconds barrierTimeout{60000};
    std::uint32_t connectRetries = 30;
    std::chrono::milliseconds connectBackoff{1000};
    std::uint64_t networkSeed = 0;

    std::optional<std::filesystem::path> profilePath;
    NetProfile profile;

    std::vector<std::string> peers;                 // tcp: "host:port" per LpId
    std::optional<std::uint32_t> thisLp;            // tcp: which entry is this process

    /// Key/value pairs recorded in summary.csv.
    ConfigEcho echo() const;
};

/// Parses an INI run configuration. `overrides` are "section.key=value" strings applied
/// on top of the file. Relative paths resolve against `baseDir`. Throws ConfigError
/// naming the source, and the line where the INI parser reports one.
RunConfig parse_config(std::istream& in, const std::string& sourceName, const std::vector<std::string>& overrides = {},
                       const std::filesystem::path& baseDir = {});

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

} // namespace adaptsim
