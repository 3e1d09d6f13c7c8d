#include "xartrek/protocol.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace xartrek::wire {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v >> 8));
        u8(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8) {
            u8(static_cast<std::uint8_t>(v >> shift));
        }
    }
    void u64(std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8) {
            u8(static_cast<std::uint8_t>(v >> shift));
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw InvalidArgument("string field longer than 65535 bytes");
        }
        u16(static_cast<std::uint16_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        need(4);
        for (int i = 0; i < 4; ++i) {
            v = (v << 8) | data_[pos_++];
        }
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        need(8);
        for (int i = 0; i < 8; ++i) {
            v = (v << 8) | data_[pos_++];
        }
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        auto n = u16();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void finish() const {
        if (pos_ != data_.size()) {
            throw ProtocolError(ErrorKind::TrailingBytes, "trailing bytes after message body");
        }
    }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw ProtocolError(ErrorKind::ShortFrame, "message body truncated");
        }
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace

Tag tag_of(const Message& msg) noexcept {
    return static_cast<Tag>(msg.index() + 1);
}

std::vector<std::uint8_t> encode_payload(const Message& msg) {
    Writer w;
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(tag_of(msg)));
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Request>) {
                w.str(m.app_id);
                w.str(m.function_id);
            } else if constexpr (std::is_same_v<T, Response>) {
                if (m.flag > 2) {
                    throw InvalidArgument("migration flag must be 0, 1 or 2");
                }
                w.u8(m.flag);
            } else if constexpr (std::is_same_v<T, Completion>) {
                const auto& r = m.record;
                if (r.load_at_start < 0 ||
                    r.load_at_start > std::numeric_limits<std::uint32_t>::max()) {
                    throw InvalidArgument("load_at_start out of range");
                }
                w.str(r.app_id);
                w.u8(to_flag(r.target));
                w.f64(r.exec_time.count());
                w.u32(static_cast<std::uint32_t>(r.load_at_start));
            } else if constexpr (std::is_same_v<T, KernelList>) {
                if (m.kernel_ids.size() > std::numeric_limits<std::uint16_t>::max()) {
                    throw InvalidArgument("too many kernel ids");
                }
                w.u16(static_cast<std::uint16_t>(m.kernel_ids.size()));
                for (const auto& k : m.kernel_ids) {
                    w.str(k);
                }
            }
        },
        msg);
    return w.take();
}

std::vector<std::uint8_t> encode(const Message& msg) {
    auto payload = encode_payload(msg);
    if (payload.size() > kMaxPayload) {
        throw InvalidArgument("message exceeds the maximum frame size");
    }
    Writer w;
    w.u32(static_cast<std::uint32_t>(payload.size()));
    auto frame = w.take();
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

Message decode_payload(std::span<const std::uint8_t> payload) {
    if (payload.size() < 2) {
        throw ProtocolError(ErrorKind::ShortFrame, "payload shorter than version and tag");
    }
    Reader r(payload);
    auto version = r.u8();
    if (version != kVersion) {
        throw ProtocolError(ErrorKind::BadVersion,
                            "unsupported protocol version " + std::to_string(version));
    }
    auto tag = r.u8();
    Message out;
    switch (static_cast<Tag>(tag)) {
    case Tag::Request: {
        Request m;
        m.app_id = r.str();
        m.function_id = r.str();
        out = std::move(m);
        break;
    }
    case Tag::Response: {
        auto flag = r.u8();
        if (flag > 2) {
            throw ProtocolError(ErrorKind::BadField, "migration flag out of range");
        }
        out = Response{flag};
        break;
    }
    case Tag::Completion: {
        Completion m;
        m.record.app_id = r.str();
        auto target = target_from_flag(r.u8());
        if (!target) {
            throw ProtocolError(ErrorKind::BadField, "completion target out of range");
        }
        m.record.target = *target;
        m.record.exec_time = Millis{r.f64()};
        m.record.load_at_start = r.u32();
        out = std::move(m);
        break;
    }
    case Tag::KernelQuery: out = KernelQuery{}; break;
    case Tag::KernelList: {
        KernelList m;
        auto n = r.u16();
        for (std::uint16_t i = 0; i < n; ++i) {
            m.kernel_ids.push_back(r.str());
        }
        out = std::move(m);
        break;
    }
    case Tag::Shutdown: out = Shutdown{}; break;
    case Tag::Ack: out = Ack{}; break;
    default:
        throw ProtocolError(ErrorKind::UnknownTag, "unknown message tag " + std::to_string(tag));
    }
    r.finish();
    return out;
}

std::uint32_t frame_length(std::span<const std::uint8_t> header) {
    if (header.size() < kHeaderSize) {
        throw ProtocolError(ErrorKind::ShortFrame, "frame shorter than its length prefix");
    }
    std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                      (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
    if (n > kMaxPayload) {
        throw ProtocolError(ErrorKind::BadLength, "frame length exceeds the maximum");
    }
    return n;
}

Message decode(std::span<const std::uint8_t> frame) {
    auto n = frame_length(frame);
    auto rest = frame.subspan(kHeaderSize);
    if (rest.size() < n) {
        throw ProtocolError(ErrorKind::ShortFrame, "frame shorter than its declared length");
    }
    if (rest.size() > n) {
        throw ProtocolError(ErrorKind::TrailingBytes, "bytes after the declared frame length");
    }
    return decode_payload(rest);
}

} // namespace xartrek::wire
