#include "xartrek/runtime.hpp"

#include "net.hpp"
#include "xartrek/kvtext.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace xartrek {

Endpoint Endpoint::parse(std::string_view text) {
    Endpoint ep;
    if (text.starts_with("tcp:")) {
        auto rest = text.substr(4);
        auto colon = rest.rfind(':');
        if (colon == std::string_view::npos) {
            throw InvalidArgument("tcp endpoint needs host:port, got '" + std::string(text) + "'");
        }
        ep.kind = Kind::Tcp;
        ep.host = std::string(rest.substr(0, colon));
        auto port = kv::to_integer(rest.substr(colon + 1), 0);
        if (port < 0 || port > 65535) {
            throw InvalidArgument("tcp port out of range in '" + std::string(text) + "'");
        }
        ep.port = static_cast<std::uint16_t>(port);
        return ep;
    }
    if (text.starts_with("unix:")) {
        text.remove_prefix(5);
    }
    if (text.empty()) {
        throw InvalidArgument("empty endpoint");
    }
    ep.kind = Kind::Unix;
    ep.path = std::string(text);
    return ep;
}

std::string Endpoint::to_string() const {
    if (kind == Kind::Tcp) {
        return "tcp:" + host + ":" + std::to_string(port);
    }
    return "unix:" + path;
}

Endpoint default_endpoint() {
    const char* env = std::getenv(kEndpointEnv);
    return Endpoint::parse(env != nullptr && *env != '\0' ? env : kDefaultEndpoint);
}

LoadSource fixed_load(Load value) {
    return [value] { return value; };
}

LoadSource proc_load() {
    return [] {
        std::ifstream in("/proc/stat");
        std::string key;
        while (in >> key) {
            if (key == "procs_running") {
                Load n = 0;
                in >> n;
                return n;
            }
            in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
        }
        return Load{0};
    };
}

LogSink stderr_log() {
    return [](std::string_view line) { std::cerr << "xartrek: " << line << '\n'; };
}

// ---------------------------------------------------------------------------
// Server

struct SchedulerServer::Impl {
    using Clock = std::chrono::steady_clock;

    struct Command {
        wire::Message msg;
        std::promise<std::optional<wire::Message>> reply;
    };

    explicit Impl(ServerConfig c) : config(std::move(c)) {
        if (!config.log) {
            config.log = [](std::string_view) {};
        }
        table = config.table;
        fpga = config.fpga;
    }

    ServerConfig config;
    net::Fd listener;
    Clock::time_point started{};

    // Owner-thread state; snapshots are taken under state_mu.
    mutable std::mutex state_mu;
    ThresholdTable table;
    FpgaState fpga;
    Load load = 0;
    std::vector<ExecutionRecord> applied;

    std::mutex queue_mu;
    std::condition_variable queue_cv;
    std::deque<Command> queue;
    bool owner_stop = false;

    std::mutex sessions_mu;
    std::map<std::uint64_t, int> session_fds;
    std::vector<std::thread> session_threads;
    std::uint64_t next_session = 0;

    std::atomic<bool> stopping{false};
    std::mutex stop_mu;
    std::condition_variable stop_cv;
    std::mutex join_mu;
    bool joined = false;

    std::thread acceptor;
    std::thread owner;
    bool running = false;

    Millis now_ms() const {
        return std::chrono::duration_cast<Millis>(Clock::now() - started);
    }

    void refresh_reconfiguration() {
        if (fpga.reconfiguring && now_ms() >= fpga.reconfiguring->completes_at) {
            fpga = complete_reconfiguration(fpga, now_ms());
            config.log("FPGA now holds image " + fpga.loaded_image.value_or("?"));
        }
    }

    std::optional<wire::Message> handle(const wire::Message& msg) {
        std::lock_guard lk(state_mu);
        refresh_reconfiguration();
        if (const auto* req = std::get_if<wire::Request>(&msg)) {
            auto it = table.find(req->app_id);
            if (it == table.end()) {
                config.log("no thresholds for app '" + req->app_id + "', staying on x86");
                return wire::Response{0};
            }
            MigrationDecision d;
            try {
                d = decide(load, it->second, fpga);
            } catch (const Error& e) {
                config.log(std::string("decision failed, staying on x86: ") + e.what());
                return wire::Response{0};
            }
            if (d.reconfigure) {
                auto r = begin_reconfiguration(fpga, *d.reconfigure, now_ms(), config.platform);
                if (r.busy) {
                    config.log("reconfiguration to " + *d.reconfigure + " dropped: busy");
                } else {
                    fpga = std::move(r.state);
                    config.log("reconfiguring FPGA to " + *d.reconfigure);
                }
            }
            return wire::Response{d.flag()};
        }
        if (const auto* c = std::get_if<wire::Completion>(&msg)) {
            auto it = table.find(c->record.app_id);
            if (it == table.end()) {
                config.log("completion for unknown app '" + c->record.app_id + "' ignored");
                return wire::Ack{};
            }
            try {
                it->second = update_on_completion(it->second, c->record);
            } catch (const Error& e) {
                config.log(std::string("rejected completion: ") + e.what());
                return std::nullopt;
            }
            applied.push_back(c->record);
            return wire::Ack{};
        }
        if (std::holds_alternative<wire::KernelQuery>(msg)) {
            auto ks = query_kernels(fpga);
            return wire::KernelList{{ks.begin(), ks.end()}};
        }
        if (std::holds_alternative<wire::Shutdown>(msg)) {
            return wire::Ack{};
        }
        config.log("unexpected message from client; closing session");
        return std::nullopt;
    }

    void sample_load() {
        Load value = config.load_source ? config.load_source() : 0;
        std::lock_guard lk(state_mu);
        load = value < 0 ? 0 : value;
        refresh_reconfiguration();
    }

    void owner_loop() {
        auto period = std::chrono::duration_cast<Clock::duration>(config.platform.load_sampler_period);
        if (period <= Clock::duration::zero()) {
            period = std::chrono::milliseconds(100);
        }
        auto next_tick = Clock::now();
        for (;;) {
            std::deque<Command> batch;
            {
                std::unique_lock lk(queue_mu);
                queue_cv.wait_until(lk, next_tick, [&] { return !queue.empty() || owner_stop; });
                batch.swap(queue);
                if (batch.empty() && owner_stop) {
                    break;
                }
            }
            if (Clock::now() >= next_tick) {
                sample_load();
                next_tick += period;
                if (next_tick < Clock::now()) {
                    next_tick = Clock::now() + period;
                }
            }
            for (auto& cmd : batch) {
                std::optional<wire::Message> out;
                try {
                    out = handle(cmd.msg);
                } catch (const std::exception& e) {
                    config.log(std::string("internal error: ") + e.what());
                }
                cmd.reply.set_value(std::move(out));
            }
        }
    }

    std::optional<wire::Message> submit(wire::Message msg) {
        std::future<std::optional<wire::Message>> fut;
        {
            std::lock_guard lk(queue_mu);
            if (owner_stop) {
                return std::nullopt;
            }
            Command cmd{std::move(msg), {}};
            fut = cmd.reply.get_future();
            queue.push_back(std::move(cmd));
        }
        queue_cv.notify_one();
        return fut.get();
    }

    void session_loop(std::uint64_t id, int fd) {
        try {
            for (;;) {
                auto msg = net::read_message(fd, std::nullopt);
                if (!msg) {
                    break;
                }
                const bool shutdown = std::holds_alternative<wire::Shutdown>(*msg);
                auto reply = submit(std::move(*msg));
                if (!reply) {
                    break;
                }
                net::write_message(fd, *reply);
                if (shutdown) {
                    request_stop();
                    break;
                }
            }
        } catch (const std::exception& e) {
            if (!stopping) {
                config.log(std::string("session closed: ") + e.what());
            }
        }
        std::lock_guard lk(sessions_mu);
        session_fds.erase(id);
        ::close(fd);
    }

    void accept_loop() {
        while (!stopping) {
            pollfd p{listener.get(), POLLIN, 0};
            int n = ::poll(&p, 1, 50);
            if (n <= 0) {
                continue;
            }
            int fd = ::accept(listener.get(), nullptr, nullptr);
            if (fd < 0) {
                continue;
            }
            std::lock_guard lk(sessions_mu);
            if (stopping) {
                ::close(fd);
                break;
            }
            auto id = next_session++;
            session_fds.emplace(id, fd);
            session_threads.emplace_back([this, id, fd] { session_loop(id, fd); });
        }
    }

    void request_stop() {
        {
            std::lock_guard lk(stop_mu);
            stopping = true;
        }
        stop_cv.notify_all();
    }

    void join_all() {
        std::lock_guard join(join_mu);
        if (joined || !running) {
            return;
        }
        {
            std::unique_lock lk(stop_mu);
            stop_cv.wait(lk, [&] { return stopping.load(); });
        }
        if (acceptor.joinable()) {
            acceptor.join();
        }
        std::vector<std::thread> threads;
        {
            std::lock_guard lk(sessions_mu);
            for (auto& [id, fd] : session_fds) {
                ::shutdown(fd, SHUT_RDWR);
            }
            threads.swap(session_threads);
        }
        for (auto& t : threads) {
            t.join();
        }
        {
            std::lock_guard lk(queue_mu);
            owner_stop = true;
        }
        queue_cv.notify_all();
        if (owner.joinable()) {
            owner.join();
        }
        listener.reset();
        if (config.endpoint.kind == Endpoint::Kind::Unix) {
            ::unlink(config.endpoint.path.c_str());
        }
        joined = true;
    }
};

SchedulerServer::SchedulerServer(ServerConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

SchedulerServer::~SchedulerServer() {
    stop();
    wait();
}

void SchedulerServer::start() {
    if (impl_->running) {
        return;
    }
    impl_->listener = net::listen_on(impl_->config.endpoint);
    impl_->started = Impl::Clock::now();
    impl_->sample_load();
    impl_->running = true;
    impl_->config.log("serving on " + impl_->config.endpoint.to_string());
    impl_->owner = std::thread([this] { impl_->owner_loop(); });
    impl_->acceptor = std::thread([this] { impl_->accept_loop(); });
}

void SchedulerServer::wait() { impl_->join_all(); }

int SchedulerServer::serve() {
    start();
    wait();
    return 0;
}

void SchedulerServer::stop() { impl_->request_stop(); }

ThresholdTable SchedulerServer::table_snapshot() const {
    std::lock_guard lk(impl_->state_mu);
    return impl_->table;
}

FpgaState SchedulerServer::fpga_snapshot() const {
    std::lock_guard lk(impl_->state_mu);
    return impl_->fpga;
}

Load SchedulerServer::current_load() const {
    std::lock_guard lk(impl_->state_mu);
    return impl_->load;
}

std::vector<ExecutionRecord> SchedulerServer::applied_completions() const {
    std::lock_guard lk(impl_->state_mu);
    return impl_->applied;
}

// ---------------------------------------------------------------------------
// Client

SchedulerSession::SchedulerSession(const ClientOptions& options) : timeout_(options.timeout) {
    fd_ = net::connect_to(options.endpoint, options.timeout).release();
}

SchedulerSession::~SchedulerSession() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

SchedulerSession::SchedulerSession(SchedulerSession&& o) noexcept
    : fd_(std::exchange(o.fd_, -1)), timeout_(o.timeout_) {}

SchedulerSession& SchedulerSession::operator=(SchedulerSession&& o) noexcept {
    if (this != &o) {
        if (fd_ >= 0) {
            ::close(fd_);
        }
        fd_ = std::exchange(o.fd_, -1);
        timeout_ = o.timeout_;
    }
    return *this;
}

wire::Message SchedulerSession::round_trip(const wire::Message& msg) {
    if (fd_ < 0) {
        throw Error("session is closed");
    }
    net::write_message(fd_, msg);
    auto reply = net::read_message(fd_, std::chrono::steady_clock::now() + timeout_);
    if (!reply) {
        throw Error("server closed the connection");
    }
    return std::move(*reply);
}

std::uint8_t SchedulerSession::request(const std::string& app_id, const std::string& function_id) {
    auto reply = round_trip(wire::Request{app_id, function_id});
    const auto* r = std::get_if<wire::Response>(&reply);
    if (r == nullptr) {
        throw Error("expected a Response from the scheduler");
    }
    return r->flag;
}

void SchedulerSession::report(const ExecutionRecord& record) {
    auto reply = round_trip(wire::Completion{record});
    if (!std::holds_alternative<wire::Ack>(reply)) {
        throw Error("expected an Ack from the scheduler");
    }
}

std::vector<std::string> SchedulerSession::query_kernels() {
    auto reply = round_trip(wire::KernelQuery{});
    auto* list = std::get_if<wire::KernelList>(&reply);
    if (list == nullptr) {
        throw Error("expected a KernelList from the scheduler");
    }
    return std::move(list->kernel_ids);
}

void SchedulerSession::shutdown_server() {
    auto reply = round_trip(wire::Shutdown{});
    if (!std::holds_alternative<wire::Ack>(reply)) {
        throw Error("expected an Ack from the scheduler");
    }
}

std::uint8_t client_request(const ClientOptions& options, const std::string& app_id,
                            const std::string& function_id) {
    try {
        SchedulerSession s(options);
        auto flag = s.request(app_id, function_id);
        return flag <= 2 ? flag : 0;
    } catch (const std::exception& e) {
        if (options.log) {
            options.log(std::string("scheduler unreachable (") + e.what() + "), running on x86");
        }
        return 0;
    }
}

bool client_report(const ClientOptions& options, const ExecutionRecord& record) {
    try {
        SchedulerSession s(options);
        s.report(record);
        return true;
    } catch (const std::exception& e) {
        if (options.log) {
            options.log(std::string("completion report failed: ") + e.what());
        }
        return false;
    }
}

} // namespace xartrek
