#include "net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <array>
#include <string>

namespace xartrek::net {

namespace {

std::string errno_text(const char* what) {
    return std::string(what) + ": " + std::strerror(errno);
}

sockaddr_un unix_address(const std::string& path) {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.empty() || path.size() >= sizeof(addr.sun_path)) {
        throw InvalidArgument("unix socket path empty or too long: '" + path + "'");
    }
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    return addr;
}

struct AddrInfo {
    addrinfo* list = nullptr;
    ~AddrInfo() {
        if (list != nullptr) {
            freeaddrinfo(list);
        }
    }
};

void resolve(const Endpoint& ep, bool passive, AddrInfo& out) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) {
        hints.ai_flags = AI_PASSIVE;
    }
    auto port = std::to_string(ep.port);
    int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints,
                         &out.list);
    if (rc != 0 || out.list == nullptr) {
        throw Error("cannot resolve '" + ep.to_string() + "': " + gai_strerror(rc));
    }
}

// Connects `fd` to `addr` within `timeout`.
void connect_with_timeout(int fd, const sockaddr* addr, socklen_t len,
                          std::chrono::milliseconds timeout) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, addr, len);
    if (rc != 0 && errno != EINPROGRESS && errno != EAGAIN) {
        throw Error(errno_text("connect"));
    }
    if (rc != 0) {
        pollfd p{fd, POLLOUT, 0};
        int n = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (n == 0) {
            throw Error("connect timed out");
        }
        if (n < 0) {
            throw Error(errno_text("poll"));
        }
        int err = 0;
        socklen_t elen = sizeof err;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &elen);
        if (err != 0) {
            errno = err;
            throw Error(errno_text("connect"));
        }
    }
    fcntl(fd, F_SETFL, flags);
}

} // namespace

void Fd::reset(int fd) noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
    }
    fd_ = fd;
}

Fd listen_on(const Endpoint& ep) {
    if (ep.kind == Endpoint::Kind::Unix) {
        auto addr = unix_address(ep.path);
        if (::access(ep.path.c_str(), F_OK) == 0) {
            // A live server answers; a stale socket file is removed.
            Fd probe(::socket(AF_UNIX, SOCK_STREAM, 0));
            if (probe.valid() &&
                ::connect(probe.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
                throw StartupError("endpoint " + ep.to_string() + " is already in use");
            }
            ::unlink(ep.path.c_str());
        }
        Fd fd(::socket(AF_UNIX, SOCK_STREAM, 0));
        if (!fd.valid()) {
            throw StartupError(errno_text("socket"));
        }
        if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            throw StartupError("cannot bind " + ep.to_string() + ": " + std::strerror(errno));
        }
        if (::listen(fd.get(), 128) != 0) {
            throw StartupError(errno_text("listen"));
        }
        return fd;
    }
    AddrInfo ai;
    resolve(ep, true, ai);
    Fd fd(::socket(ai.list->ai_family, ai.list->ai_socktype, ai.list->ai_protocol));
    if (!fd.valid()) {
        throw StartupError(errno_text("socket"));
    }
    int one = 1;
    setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd.get(), ai.list->ai_addr, ai.list->ai_addrlen) != 0) {
        throw StartupError("cannot bind " + ep.to_string() + ": " + std::strerror(errno));
    }
    if (::listen(fd.get(), 128) != 0) {
        throw StartupError(errno_text("listen"));
    }
    return fd;
}

Fd connect_to(const Endpoint& ep, std::chrono::milliseconds timeout) {
    if (ep.kind == Endpoint::Kind::Unix) {
        auto addr = unix_address(ep.path);
        Fd fd(::socket(AF_UNIX, SOCK_STREAM, 0));
        if (!fd.valid()) {
            throw Error(errno_text("socket"));
        }
        connect_with_timeout(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr, timeout);
        return fd;
    }
    AddrInfo ai;
    resolve(ep, false, ai);
    Fd fd(::socket(ai.list->ai_family, ai.list->ai_socktype, ai.list->ai_protocol));
    if (!fd.valid()) {
        throw Error(errno_text("socket"));
    }
    connect_with_timeout(fd.get(), ai.list->ai_addr, ai.list->ai_addrlen, timeout);
    int one = 1;
    setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return fd;
}

bool read_exact(int fd, std::span<std::uint8_t> buf,
                std::optional<std::chrono::steady_clock::time_point> deadline) {
    std::size_t got = 0;
    while (got < buf.size()) {
        if (deadline) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                *deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                throw Error("timed out waiting for the scheduler");
            }
            pollfd p{fd, POLLIN, 0};
            int n = ::poll(&p, 1, static_cast<int>(left.count()));
            if (n == 0) {
                throw Error("timed out waiting for the scheduler");
            }
            if (n < 0 && errno != EINTR) {
                throw Error(errno_text("poll"));
            }
            if (n < 0) {
                continue;
            }
        }
        ssize_t n = ::recv(fd, buf.data() + got, buf.size() - got, 0);
        if (n == 0) {
            if (got == 0) {
                return false;
            }
            throw Error("connection closed mid-frame");
        }
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw Error(errno_text("recv"));
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

void write_all(int fd, std::span<const std::uint8_t> buf) {
    std::size_t sent = 0;
    while (sent < buf.size()) {
        ssize_t n = ::send(fd, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw Error(errno_text("send"));
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::optional<wire::Message>
read_message(int fd, std::optional<std::chrono::steady_clock::time_point> deadline) {
    std::array<std::uint8_t, wire::kHeaderSize> header{};
    if (!read_exact(fd, header, deadline)) {
        return std::nullopt;
    }
    auto len = wire::frame_length(header);
    std::vector<std::uint8_t> payload(len);
    if (len > 0 && !read_exact(fd, payload, deadline)) {
        throw Error("connection closed mid-frame");
    }
    return wire::decode_payload(payload);
}

void write_message(int fd, const wire::Message& msg) {
    auto frame = wire::encode(msg);
    write_all(fd, frame);
}

} // namespace xartrek::net
