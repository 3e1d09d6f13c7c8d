#pragma once

// Scheduler wire format. Every message travels in one frame:
//
//   u32 BE payload length | u8 version (=1) | u8 tag | body
//
// Strings are u16 BE length + bytes. Bodies per tag:
//   1 Request      str app_id, str function_id
//   2 Response     u8 flag (0 x86, 1 ARM, 2 FPGA)
//   3 Completion   str app_id, u8 target, f64 BE exec_ms, u32 BE load_at_start
//   4 KernelQuery  (empty)
//   5 KernelList   u16 count, count x str kernel_id
//   6 Shutdown     (empty)
//   7 Ack          (empty)

#include "xartrek/error.hpp"
#include "xartrek/threshold.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace xartrek::wire {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::uint32_t kMaxPayload = 1u << 20;

enum class Tag : std::uint8_t {
    Request = 1,
    Response = 2,
    Completion = 3,
    KernelQuery = 4,
    KernelList = 5,
    Shutdown = 6,
    Ack = 7,
};

struct Request {
    std::string app_id;
    std::string function_id;
    friend bool operator==(const Request&, const Request&) = default;
};
struct Response {
    std::uint8_t flag = 0;
    friend bool operator==(const Response&, const Response&) = default;
};
struct Completion {
    ExecutionRecord record;
    friend bool operator==(const Completion&, const Completion&) = default;
};
struct KernelQuery {
    friend bool operator==(const KernelQuery&, const KernelQuery&) = default;
};
struct KernelList {
    std::vector<std::string> kernel_ids;
    friend bool operator==(const KernelList&, const KernelList&) = default;
};
struct Shutdown {
    friend bool operator==(const Shutdown&, const Shutdown&) = default;
};
struct Ack {
    friend bool operator==(const Ack&, const Ack&) = default;
};

using Message = std::variant<Request, Response, Completion, KernelQuery, KernelList, Shutdown, Ack>;

enum class ErrorKind { ShortFrame, BadLength, BadVersion, UnknownTag, BadField, TrailingBytes };

class ProtocolError : public Error {
public:
    ProtocolError(ErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[nodiscard]] Tag tag_of(const Message& msg) noexcept;

/// Payload only (version byte onwards).
[[nodiscard]] std::vector<std::uint8_t> encode_payload(const Message& msg);
/// Full frame: length prefix + payload. Throws InvalidArgument for fields
/// that cannot be represented (over-long strings, flag > 2).
[[nodiscard]] std::vector<std::uint8_t> encode(const Message& msg);

[[nodiscard]] Message decode_payload(std::span<const std::uint8_t> payload);
/// Exactly one frame; throws ProtocolError on any malformed input.
[[nodiscard]] Message decode(std::span<const std::uint8_t> frame);

/// Reads the big-endian length prefix; throws on short input or oversize.
[[nodiscard]] std::uint32_t frame_length(std::span<const std::uint8_t> header);

} // namespace xartrek::wire
