#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "adaptsim/bytes.hpp"
#include "adaptsim/ids.hpp"

namespace adaptsim {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxEventPayload = 1024;
/// Upper bound on the length field; anything larger is rejected before allocation.
inline constexpr std::uint32_t kMaxFrameLength = 1u << 20;

enum class FrameKind : std::uint8_t {
    Hello = 1,
    Event = 2,
    StepDone = 3,
    MigrateAnnounce = 4,
    MigrateData = 5,
    Bye = 6,
};

struct HelloBody {
    std::uint16_t protocolVersion = kProtocolVersion;
    LpId lp;
    std::uint32_t numLps = 0;
    std::uint64_t globalSeed = 0;
    friend bool operator==(const HelloBody&, const HelloBody&) = default;
};

struct EventBody {
    Timestep step;
    SeId sender;
    std::uint32_t seq = 0;
    SeId dest = kBroadcast;
    Bytes payload;
    friend bool operator==(const EventBody&, const EventBody&) = default;
};

struct StepDoneBody {
    Timestep step;
    std::uint32_t sentCount = 0;
    std::uint64_t busyNanos = 0;
    std::uint32_t seCount = 0;
    friend bool operator==(const StepDoneBody&, const StepDoneBody&) = default;
};

struct MigrateAnnounceBody {
    Timestep step;
    SeId se;
    LpId from;
    LpId to;
    friend bool operator==(const MigrateAnnounceBody&, const MigrateAnnounceBody&) = default;
};

struct MigrateDataBody {
    Timestep step;
    SeId se;
    Bytes state;
    friend bool operator==(const MigrateDataBody&, const MigrateDataBody&) = default;
};

struct ByeBody {
    Timestep step;
    friend bool operator==(const ByeBody&, const ByeBody&) = default;
};

using Frame = std::variant<HelloBody, EventBody, StepDoneBody, MigrateAnnounceBody, MigrateDataBody, ByeBody>;

FrameKind kind_of(const Frame& frame);
const char* to_string(FrameKind kind);

enum class FrameError {
    Truncated,      // fewer bytes than the header or declared length require
    UnknownKind,    // kind byte outside 1..6
    Oversize,       // declared length or payload above the protocol limits
    Malformed,      // body size disagrees with the declared length, or a body invariant fails
};

const char* to_string(FrameError error);

class FrameDecodeError : public std::runtime_error {
public:
    FrameDecodeError(FrameError code, const std::string& what) : std::runtime_error(what), code_(code) {}
    FrameError code() const { return code_; }

private:
    FrameError code_;
};

class FrameEncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Serializes a frame: u32 big-endian length (bytes after the length field), kind byte, body.
Bytes encode_frame(const Frame& frame);
void encode_frame_into(const Frame& frame, Bytes& out);

/// Decodes exactly one frame occupying all of `bytes`.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Stream helper: if `buffer` starts with a complete frame, returns its total size
/// (length prefix included); std::nullopt if more bytes are needed. Validates the
/// length field so oversize declarations fail before anything is buffered.
std::optional<std::size_t> complete_frame_size(std::span<const std::uint8_t> buffer);

} // namespace adaptsim
