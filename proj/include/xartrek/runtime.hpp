#pragma once

// Scheduler server and client over the wire protocol. The server owns the
// threshold table, the FPGA state and the load reading; session threads only
// parse frames and forward them to a single owner thread, which applies every
// mutation in arrival order.

#include "xartrek/protocol.hpp"
#include "xartrek/scheduler.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace xartrek {

struct Endpoint {
    enum class Kind { Unix, Tcp };
    Kind kind = Kind::Unix;
    std::string path;
    std::string host;
    std::uint16_t port = 0;

    /// "unix:/path", "tcp:host:port", or a bare filesystem path.
    [[nodiscard]] static Endpoint parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;
};

inline constexpr const char* kEndpointEnv = "XARTREK_ENDPOINT";
inline constexpr const char* kDefaultEndpoint = "unix:/tmp/xartrek.sock";

/// $XARTREK_ENDPOINT when set, the default unix socket otherwise.
[[nodiscard]] Endpoint default_endpoint();

using LoadSource = std::function<Load()>;
[[nodiscard]] LoadSource fixed_load(Load value);
/// Runnable processes from /proc/stat (procs_running).
[[nodiscard]] LoadSource proc_load();

using LogSink = std::function<void(std::string_view)>;
[[nodiscard]] LogSink stderr_log();

class StartupError : public Error {
public:
    using Error::Error;
};

struct ServerConfig {
    Endpoint endpoint;
    PlatformSpec platform;
    ThresholdTable table;
    FpgaState fpga;
    LoadSource load_source = fixed_load(0);
    LogSink log;
};

class SchedulerServer {
public:
    explicit SchedulerServer(ServerConfig config);
    ~SchedulerServer();
    SchedulerServer(const SchedulerServer&) = delete;
    SchedulerServer& operator=(const SchedulerServer&) = delete;

    /// Binds and starts serving. Throws StartupError when the endpoint is in use.
    void start();
    /// Blocks until a Shutdown message (or stop()) has drained all sessions.
    void wait();
    /// start() + wait(); returns the process exit code.
    int serve();
    void stop();

    [[nodiscard]] ThresholdTable table_snapshot() const;
    [[nodiscard]] FpgaState fpga_snapshot() const;
    [[nodiscard]] Load current_load() const;
    /// Completions in the order the owner applied them.
    [[nodiscard]] std::vector<ExecutionRecord> applied_completions() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ClientOptions {
    Endpoint endpoint;
    std::chrono::milliseconds timeout{1000};
    LogSink log;
};

/// One connection to the server; calls are synchronous request/response.
class SchedulerSession {
public:
    explicit SchedulerSession(const ClientOptions& options);
    ~SchedulerSession();
    SchedulerSession(SchedulerSession&&) noexcept;
    SchedulerSession& operator=(SchedulerSession&&) noexcept;

    /// Throws Error on transport failure, timeout or an unexpected reply.
    [[nodiscard]] std::uint8_t request(const std::string& app_id, const std::string& function_id);
    void report(const ExecutionRecord& record);
    [[nodiscard]] std::vector<std::string> query_kernels();
    void shutdown_server();

private:
    wire::Message round_trip(const wire::Message& msg);

    int fd_ = -1;
    std::chrono::milliseconds timeout_;
};

/// Where should this function run? Any failure yields flag 0 (stay on x86)
/// and is logged.
[[nodiscard]] std::uint8_t client_request(const ClientOptions& options, const std::string& app_id,
                                          const std::string& function_id);
/// True when the server acknowledged the record.
[[nodiscard]] bool client_report(const ClientOptions& options, const ExecutionRecord& record);

} // namespace xartrek
