#include "adaptsim/frame.hpp"

#include <type_traits>

namespace adaptsim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate(const Frame& frame) {
    if (const auto* ev = std::get_if<EventBody>(&frame)) {
        if (ev->payload.size() > kMaxEventPayload) {
            throw FrameEncodeError("event payload of " + std::to_string(ev->payload.size()) + " bytes exceeds " +
                                   std::to_string(kMaxEventPayload));
        }
    } else if (const auto* ann = std::get_if<MigrateAnnounceBody>(&frame)) {
        if (ann->from == ann->to) {
            throw FrameEncodeError("migrate announce with from == to");
        }
    } else if (const auto* data = std::get_if<MigrateDataBody>(&frame)) {
        if (data->state.size() > kMaxFrameLength - 21) {
            throw FrameEncodeError("migrate state too large");
        }
    }
}

} // namespace

FrameKind kind_of(const Frame& frame) {
    return std::visit(Overloaded{
                          [](const HelloBody&) { return FrameKind::Hello; },
                          [](const EventBody&) { return FrameKind::Event; },
                          [](const StepDoneBody&) { return FrameKind::StepDone; },
                          [](const MigrateAnnounceBody&) { return FrameKind::MigrateAnnounce; },
                          [](const MigrateDataBody&) { return FrameKind::MigrateData; },
                          [](const ByeBody&) { return FrameKind::Bye; },
                      },
                      frame);
}

const char* to_string(FrameKind kind) {
    switch (kind) {
    case FrameKind::Hello: return "HELLO";
    case FrameKind::Event: return "EVENT";
    case FrameKind::StepDone: return "STEP_DONE";
    case FrameKind::MigrateAnnounce: return "MIGRATE_ANNOUNCE";
    case FrameKind::MigrateData: return "MIGRATE_DATA";
    case FrameKind::Bye: return "BYE";
    }
    return "?";
}

const char* to_string(FrameError error) {
    switch (error) {
    case FrameError::Truncated: return "truncated";
    case FrameError::UnknownKind: return "unknown kind";
    case FrameError::Oversize: return "oversize";
    case FrameError::Malformed: return "malformed";
    }
    return "?";
}

void encode_frame_into(const Frame& frame, Bytes& out) {
    validate(frame);
    const std::size_t start = out.size();
    ByteWriter w(out);
    w.u32(0); // patched below
    w.u8(static_cast<std::uint8_t>(kind_of(frame)));
    std::visit(Overloaded{
                   [&](const HelloBody& b) {
                       w.u16(b.protocolVersion);
                       w.u32(b.lp.value);
                       w.u32(b.numLps);
                       w.u64(b.globalSeed);
                   },
                   [&](const EventBody& b) {
                       w.u64(b.step.value);
                       w.u64(b.sender.value);
                       w.u32(b.seq);
                       w.u64(b.dest.value);
                       w.u16(static_cast<std::uint16_t>(b.payload.size()));
                       w.raw(b.payload);
                   },
                   [&](const StepDoneBody& b) {
                       w.u64(b.step.value);
                       w.u32(b.sentCount);
                       w.u64(b.busyNanos);
                       w.u32(b.seCount);
                   },
                   [&](const MigrateAnnounceBody& b) {
                       w.u64(b.step.value);
                       w.u64(b.se.value);
                       w.u32(b.from.value);
                       w.u32(b.to.value);
                   },
                   [&](const MigrateDataBody& b) {
                       w.u64(b.step.value);
                       w.u64(b.se.value);
                       w.u32(static_cast<std::uint32_t>(b.state.size()));
                       w.raw(b.state);
                   },
                   [&](const ByeBody& b) { w.u64(b.step.value); },
               },
               frame);
    const auto length = static_cast<std::uint32_t>(out.size() - start - 4);
    out[start + 0] = static_cast<std::uint8_t>(length >> 24);
    out[start + 1] = static_cast<std::uint8_t>(length >> 16);
    out[start + 2] = static_cast<std::uint8_t>(length >> 8);
    out[start + 3] = static_cast<std::uint8_t>(length);
}

Bytes encode_frame(const Frame& frame) {
    Bytes out;
    encode_frame_into(frame, out);
    return out;
}

std::optional<std::size_t> complete_frame_size(std::span<const std::uint8_t> buffer) {
    if (buffer.size() < 4) {
        return std::nullopt;
    }
    const std::uint32_t length = (std::uint32_t{buffer[0]} << 24) | (std::uint32_t{buffer[1]} << 16) |
                                 (std::uint32_t{buffer[2]} << 8) | std::uint32_t{buffer[3]};
    if (length > kMaxFrameLength) {
        throw FrameDecodeError(FrameError::Oversize, "declared frame length " + std::to_string(length) + " exceeds limit");
    }
    if (length == 0) {
        throw FrameDecodeError(FrameError::Malformed, "zero frame length");
    }
    if (buffer.size() - 4 < length) {
        return std::nullopt;
    }
    return std::size_t{length} + 4;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 5) {
        throw FrameDecodeError(FrameError::Truncated, "frame shorter than header");
    }
    const auto total = complete_frame_size(bytes);
    if (!total) {
        throw FrameDecodeError(FrameError::Truncated, "frame body shorter than declared length");
    }
    if (*total != bytes.size()) {
        throw FrameDecodeError(FrameError::Malformed, "trailing bytes after frame");
    }

    ByteReader r(bytes.subspan(4));
    const std::uint8_t kind = r.u8();
    try {
        Frame frame;
        switch (static_cast<FrameKind>(kind)) {
        case FrameKind::Hello: {
            HelloBody b;
            b.protocolVersion = r.u16();
            b.lp = LpId{r.u32()};
            b.numLps = r.u32();
            b.globalSeed = r.u64();
            frame = b;
            break;
        }
        case FrameKind::Event: {
            EventBody b;
            b.step = Timestep{r.u64()};
            b.sender = SeId{r.u64()};
            b.seq = r.u32();
            b.dest = SeId{r.u64()};
            const std::uint16_t len = r.u16();
            if (len > kMaxEventPayload) {
                throw FrameDecodeError(FrameError::Oversize, "event payload length " + std::to_string(len));
            }
            auto payload = r.raw(len);
            b.payload.assign(payload.begin(), payload.end());
            frame = std::move(b);
            break;
        }
        case FrameKind::StepDone: {
            StepDoneBody b;
            b.step = Timestep{r.u64()};
            b.sentCount = r.u32();
            b.busyNanos = r.u64();
            b.seCount = r.u32();
            frame = b;
            break;
        }
        case FrameKind::MigrateAnnounce: {
            MigrateAnnounceBody b;
            b.step = Timestep{r.u64()};
            b.se = SeId{r.u64()};
            b.from = LpId{r.u32()};
            b.to = LpId{r.u32()};
            if (b.from == b.to) {
                throw FrameDecodeError(FrameError::Malformed, "migrate announce with from == to");
            }
            frame = b;
            break;
        }
        case FrameKind::MigrateData: {
            MigrateDataBody b;
            b.step = Timestep{r.u64()};
            b.se = SeId{r.u64()};
            const std::uint32_t len = r.u32();
            if (len > r.remaining()) {
                throw FrameDecodeError(FrameError::Truncated, "migrate state shorter than declared");
            }
            auto state = r.raw(len);
            b.state.assign(state.begin(), state.end());
            frame = std::move(b);
            break;
        }
        case FrameKind::Bye: {
            frame = ByeBody{Timestep{r.u64()}};
            break;
        }
        default:
            throw FrameDecodeError(FrameError::UnknownKind, "unknown frame kind 0x" + [kind] {
                static const char* hex = "0123456789ABCDEF";
                return std::string{hex[kind >> 4], hex[kind & 0xF]};
            }());
        }
        if (r.remaining() != 0) {
            throw FrameDecodeError(FrameError::Malformed, "body longer than its fields");
        }
        return frame;
    } catch (const ShortRead&) {
        throw FrameDecodeError(FrameError::Truncated, std::string("short ") + to_string(static_cast<FrameKind>(kind)) + " body");
    }
}

} // namespace adaptsim
