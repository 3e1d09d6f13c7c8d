#pragma once

// Thin POSIX socket helpers shared by the scheduler server and client.

#include "xartrek/runtime.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace xartrek::net {

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) noexcept : fd_(fd) {}
    ~Fd() { reset(); }
    Fd(Fd&& o) noexcept : fd_(o.release()) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            reset(o.release());
        }
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;

    [[nodiscard]] int get() const noexcept { return fd_; }
    [[nodiscard]] bool valid() const noexcept { return fd_ >= 0; }
    int release() noexcept {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }
    void reset(int fd = -1) noexcept;

private:
    int fd_ = -1;
};

/// Throws StartupError when the endpoint is already served or cannot be bound.
[[nodiscard]] Fd listen_on(const Endpoint& ep);

/// Throws Error on failure or timeout.
[[nodiscard]] Fd connect_to(const Endpoint& ep, std::chrono::milliseconds timeout);

/// A missing deadline blocks indefinitely. Returns false on orderly EOF
/// before any byte; throws Error on errors, timeouts and mid-frame EOF.
bool read_exact(int fd, std::span<std::uint8_t> buf,
                std::optional<std::chrono::steady_clock::time_point> deadline);
void write_all(int fd, std::span<const std::uint8_t> buf);

/// Reads one frame; nullopt on clean EOF at a frame boundary.
[[nodiscard]] std::optional<wire::Message>
read_message(int fd, std::optional<std::chrono::steady_clock::time_point> deadline);
void write_message(int fd, const wire::Message& msg);

} // namespace xartrek::net
