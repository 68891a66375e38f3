#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "adaptsim/realtime.hpp"

namespace adaptsim {

namespace {

struct Endpoint {
    std::string host;
    std::string port;
};

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw HandshakeError("peer address '" + text + "' is not host:port");
    }
    return {text.substr(0, colon), text.substr(colon + 1)};
}

std::string errno_text() { return std::strerror(errno); }

struct AddrInfo {
    addrinfo* head = nullptr;
    ~AddrInfo() {
        if (head) freeaddrinfo(head);
    }
};

AddrInfo resolve(const Endpoint& ep, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = passive ? AI_PASSIVE : 0;
    AddrInfo out;
    if (int rc = getaddrinfo(ep.host.c_str(), ep.port.c_str(), &hints, &out.head); rc != 0) {
        throw HandshakeError("cannot resolve " + ep.host + ":" + ep.port + ": " + gai_strerror(rc));
    }
    return out;
}

/// Reads exactly n bytes. False on EOF or error; `reason` says which.
bool read_exact(int fd, std::uint8_t* buf, std::size_t n, std::string& reason) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r == 0) {
            reason = "connection closed by peer";
            return false;
        }
        if (r < 0) {
            if (errno == EINTR) continue;
            reason = errno_text();
            return false;
        }
        got += static_cast<std::size_t>(r);
    }
    return true;
}

void write_all(int fd, const Bytes& bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t r = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw RunAborted("send failed: " + errno_text());
        }
        sent += static_cast<std::size_t>(r);
    }
}

/// One frame off the socket. nullopt with `reason` set when the link ends.
std::optional<Frame> read_frame(int fd, std::string& reason) {
    Bytes buf(4);
    if (!read_exact(fd, buf.data(), 4, reason)) {
        return std::nullopt;
    }
    const std::uint32_t length = (std::uint32_t{buf[0]} << 24) | (std::uint32_t{buf[1]} << 16) |
                                 (std::uint32_t{buf[2]} << 8) | std::uint32_t{buf[3]};
    if (length == 0 || length > kMaxFrameLength) {
        reason = "frame length " + std::to_string(length) + " out of bounds";
        return std::nullopt;
    }
    buf.resize(4 + length);
    if (!read_exact(fd, buf.data() + 4, length, reason)) {
        return std::nullopt;
    }
    try {
        return decode_frame(buf);
    } catch (const FrameDecodeError& e) {
        reason = std::string("malformed frame: ") + e.what();
        return std::nullopt;
    }
}

bool wait_readable(int fd, std::chrono::milliseconds timeout) {
    pollfd p{fd, POLLIN, 0};
    return ::poll(&p, 1, static_cast<int>(timeout.count())) > 0;
}

HelloBody read_hello(int fd, std::chrono::milliseconds timeout, const std::string& who) {
    if (!wait_readable(fd, timeout)) {
        throw HandshakeError("no HELLO from " + who + " within " + std::to_string(timeout.count()) + " ms");
    }
    std::string reason;
    auto frame = read_frame(fd, reason);
    if (!frame) {
        throw HandshakeError("handshake with " + who + " failed: " + reason);
    }
    const auto* hello = std::get_if<HelloBody>(&*frame);
    if (!hello) {
        throw HandshakeError(std::string("first frame from ") + who + " was " + to_string(kind_of(*frame)) +
                             ", expected HELLO");
    }
    return *hello;
}

void check_hello(const HelloBody& mine, const HelloBody& theirs, std::optional<LpId> expected) {
    std::ostringstream msg;
    if (theirs.protocolVersion != mine.protocolVersion) {
        msg << "protocol version mismatch: LP " << theirs.lp.value << " speaks " << theirs.protocolVersion
            << ", LP " << mine.lp.value << " speaks " << mine.protocolVersion;
    } else if (theirs.numLps != mine.numLps) {
        msg << "num_lps mismatch: LP " << theirs.lp.value << " has " << theirs.numLps << ", LP " << mine.lp.value
            << " has " << mine.numLps;
    } else if (theirs.globalSeed != mine.globalSeed) {
        msg << "global seed mismatch: LP " << theirs.lp.value << " has " << theirs.globalSeed << ", LP "
            << mine.lp.value << " has " << mine.globalSeed;
    } else if (theirs.lp == mine.lp) {
        msg << "duplicate this_lp: both ends claim LP " << mine.lp.value;
    } else if (expected && theirs.lp != *expected) {
        msg << "expected LP " << expected->value << " but LP " << theirs.lp.value << " answered";
    } else if (theirs.lp.value >= mine.numLps) {
        msg << "peer claims LP " << theirs.lp.value << " outside [0, " << mine.numLps << ")";
    } else {
        return;
    }
    throw HandshakeError(msg.str());
}

class TcpMesh final : public Mesh {
public:
    TcpMesh(LpId self, std::vector<int> fds) : self_(self), fds_(std::move(fds)), sendMu_(fds_.size()) {
        for (std::uint32_t p = 0; p < fds_.size(); ++p) {
            if (fds_[p] >= 0) {
                readers_.emplace_back([this, p] { read_loop(p); });
            }
        }
    }

    ~TcpMesh() override { close(); }

    void send(LpId to, const Frame& frame) override {
        const int fd = fds_.at(to.value);
        if (fd < 0) {
            throw RunAborted("no link to LP " + std::to_string(to.value));
        }
        const Bytes bytes = encode_frame(frame);
        std::lock_guard lock(sendMu_[to.value]);
        write_all(fd, bytes);
    }

    std::optional<Incoming> receive(Clock::time_point deadline) override {
        std::unique_lock lock(mu_);
        if (!cv_.wait_until(lock, deadline, [&] { return !queue_.empty(); })) {
            return std::nullopt;
        }
        Incoming in = std::move(queue_.front());
        queue_.pop_front();
        return in;
    }

    void close() override {
        if (closed_.exchange(true)) {
            return;
        }
        for (int fd : fds_) {
            if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
        }
        for (auto& th : readers_) th.join();
        for (int fd : fds_) {
            if (fd >= 0) ::close(fd);
        }
    }

private:
    void read_loop(std::uint32_t peer) {
        std::string reason;
        for (;;) {
            auto frame = read_frame(fds_[peer], reason);
            if (!frame) {
                push(Incoming{LpId{peer}, std::nullopt, reason});
                return;
            }
            const bool bye = std::holds_alternative<ByeBody>(*frame);
            push(Incoming{LpId{peer}, std::move(frame), {}});
            if (bye) {
                return;
            }
        }
    }

    void push(Incoming in) {
        {
            std::lock_guard lock(mu_);
            queue_.push_back(std::move(in));
        }
        cv_.notify_one();
    }

    LpId self_;
    std::vector<int> fds_;
    std::vector<std::mutex> sendMu_;
    std::vector<std::thread> readers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Incoming> queue_;
    std::atomic<bool> closed_{false};
};

int listen_on(const Endpoint& ep, LpId self) {
    AddrInfo ai = resolve(ep, true);
    const int fd = ::socket(ai.head->ai_family, ai.head->ai_socktype, ai.head->ai_protocol);
    if (fd < 0) {
        throw HandshakeError("socket: " + errno_text());
    }
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai.head->ai_addr, ai.head->ai_addrlen) != 0 || ::listen(fd, 16) != 0) {
        const std::string err = errno_text();
        ::close(fd);
        throw HandshakeError("LP " + std::to_string(self.value) + " cannot listen on " + ep.host + ":" + ep.port + ": " +
                             err + " (another process with the same this_lp?)");
    }
    return fd;
}

int dial(const Endpoint& ep, const TcpMeshOptions& o, std::uint32_t peer) {
    for (std::uint32_t attempt = 0;; ++attempt) {
        AddrInfo ai = resolve(ep, false);
        const int fd = ::socket(ai.head->ai_family, ai.head->ai_socktype, ai.head->ai_protocol);
        if (fd < 0) {
            throw HandshakeError("socket: " + errno_text());
        }
        if (::connect(fd, ai.head->ai_addr, ai.head->ai_addrlen) == 0) {
            return fd;
        }
        const std::string err = errno_text();
        ::close(fd);
        if (attempt + 1 >= o.connectRetries) {
            throw RunAborted("LP " + std::to_string(peer) + " at " + ep.host + ":" + ep.port + " unreachable after " +
                             std::to_string(o.connectRetries) + " attempts: " + err);
        }
        spdlog::debug("connect to LP {} failed ({}), retrying", peer, err);
        std::this_thread::sleep_for(o.connectBackoff);
    }
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

} // namespace

std::unique_ptr<Mesh> connect_tcp_mesh(const TcpMeshOptions& o) {
    const auto n = static_cast<std::uint32_t>(o.peers.size());
    if (o.self.value >= n) {
        throw HandshakeError("this_lp " + std::to_string(o.self.value) + " has no entry in a peer list of " +
                             std::to_string(n));
    }
    const HelloBody mine{kProtocolVersion, o.self, n, o.globalSeed};
    const auto handshakeTimeout = o.connectBackoff * static_cast<int>(std::max<std::uint32_t>(o.connectRetries, 1));

    std::vector<int> fds(n, -1);
    auto cleanup = [&] {
        for (int& fd : fds) {
            if (fd >= 0) ::close(fd);
            fd = -1;
        }
    };

    const int listener = listen_on(parse_endpoint(o.peers[o.self.value]), o.self);
    std::exception_ptr acceptError;
    std::thread acceptor([&] {
        try {
            for (std::uint32_t accepted = 0; accepted < o.self.value; ++accepted) {
                if (!wait_readable(listener, handshakeTimeout)) {
                    throw RunAborted("lower-numbered peers did not connect within " +
                                     std::to_string(handshakeTimeout.count()) + " ms");
                }
                const int fd = ::accept(listener, nullptr, nullptr);
                if (fd < 0) {
                    throw HandshakeError("accept: " + errno_text());
                }
                set_nodelay(fd);
                HelloBody theirs;
                try {
                    theirs = read_hello(fd, handshakeTimeout, "an incoming peer");
                    // answer first so both ends can report a mismatch
                    write_all(fd, encode_frame(mine));
                    check_hello(mine, theirs, std::nullopt);
                    if (theirs.lp.value > o.self.value || fds[theirs.lp.value] >= 0) {
                        throw HandshakeError("unexpected connection from LP " + std::to_string(theirs.lp.value) +
                                             " (duplicate this_lp?)");
                    }
                } catch (...) {
                    ::close(fd);
                    throw;
                }
                fds[theirs.lp.value] = fd;
            }
        } catch (...) {
            acceptError = std::current_exception();
        }
    });

    std::exception_ptr dialError;
    try {
        for (std::uint32_t p = o.self.value + 1; p < n; ++p) {
            const int fd = dial(parse_endpoint(o.peers[p]), o, p);
            fds[p] = fd;
            set_nodelay(fd);
            write_all(fd, encode_frame(mine));
            const HelloBody theirs = read_hello(fd, handshakeTimeout, "LP " + std::to_string(p));
            check_hello(mine, theirs, LpId{p});
        }
    } catch (...) {
        dialError = std::current_exception();
        ::shutdown(listener, SHUT_RDWR);
    }
    acceptor.join();
    ::close(listener);
    if (dialError || acceptError) {
        cleanup();
        std::rethrow_exception(dialError ? dialError : acceptError);
    }
    spdlog::info("LP {}: mesh of {} LPs established", o.self.value, n);
    return std::make_unique<TcpMesh>(o.self, std::move(fds));
}

} // namespace adaptsim
