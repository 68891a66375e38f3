#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptsim/frame.hpp"
#include "adaptsim/harness.hpp"
#include "adaptsim/sync.hpp"

namespace adaptsim {

using Clock = std::chrono::steady_clock;

/// A run could not complete: peer failure, barrier timeout or protocol violation.
class RunAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// HELLO disagreement, duplicate LP id or unusable listen address.
class HandshakeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Incoming {
    LpId from;
    std::optional<Frame> frame;     // nullopt: the link to `from` is gone
    std::string reason;             // why the link closed
};

/// Full mesh of reliable FIFO links seen from one LP. receive() hands over inbound
/// frames of all links through one serialized queue.
class Mesh {
public:
    virtual ~Mesh() = default;
    virtual void send(LpId to, const Frame& frame) = 0;
    /// Next inbound frame; std::nullopt if the deadline passes first.
    virtual std::optional<Incoming> receive(Clock::time_point deadline) = 0;
    virtual void close() = 0;
};

/// n meshes wired to each other through in-memory queues.
std::vector<std::unique_ptr<Mesh>> make_in_process_mesh(std::uint32_t numLps);

struct TcpMeshOptions {
    std::vector<std::string> peers;         // "host:port", indexed by LpId
    LpId self;
    std::uint64_t globalSeed = 0;
    std::uint32_t connectRetries = 30;
    std::chrono::milliseconds connectBackoff{1000};
};

/// Listens on peers[self], dials every higher LpId, accepts every lower one, and
/// exchanges HELLO on each link. Throws HandshakeError on any disagreement.
std::unique_ptr<Mesh> connect_tcp_mesh(const TcpMeshOptions& options);

struct RealtimeOptions {
    std::chrono::milliseconds barrierTimeout{60000};
    /// Measured busy time in STEP_DONE; false keeps the cost model.
    bool measureBusy = true;
};

struct RealtimeResult {
    std::vector<StepRecord> records;
    std::int64_t wctNanos = 0;
};

/// Drives one LP through all steps over `mesh`, then exchanges BYE(S). On any failure
/// it sends BYE with an earlier step to every peer and throws RunAborted.
RealtimeResult run_realtime(LogicalProcess& lp, Mesh& mesh, const RealtimeOptions& options);

/// All LPs in this process, one thread each, over an in-process mesh. No determinism
/// guarantee beyond the model results.
SimResult run_threads(const EngineConfig& config, const NetProfile& profile, const RealtimeOptions& options);

} // namespace adaptsim
