#include "xartrek/sim.hpp"

#include "xartrek/error.hpp"
#include "xartrek/kvtext.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <random>

namespace xartrek::sim {

SimTime to_sim_time(Millis ms) {
    return SimTime{static_cast<SimTime::rep>(std::llround(ms.count() * 1000.0))};
}

Millis to_millis(SimTime t) { return Millis{static_cast<double>(t.count()) / 1000.0}; }

std::string_view to_string(Policy p) noexcept {
    switch (p) {
    case Policy::XarTrek: return "xartrek";
    case Policy::AlwaysX86: return "x86";
    case Policy::AlwaysARM: return "arm";
    case Policy::AlwaysFPGA: return "fpga";
    }
    return "?";
}

std::optional<Policy> parse_policy(std::string_view text) noexcept {
    if (text.starts_with("always-")) {
        text.remove_prefix(7);
    }
    if (text == "xartrek") return Policy::XarTrek;
    if (text == "x86") return Policy::AlwaysX86;
    if (text == "arm") return Policy::AlwaysARM;
    if (text == "fpga") return Policy::AlwaysFPGA;
    return std::nullopt;
}

std::size_t ArrivalSchedule::foreground_count() const {
    return static_cast<std::size_t>(
        std::count_if(arrivals.begin(), arrivals.end(), [](const Arrival& a) { return !a.background; }));
}

namespace {

// Unbiased draw from [0, n) that only relies on the engine's specified output.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t x = rng();
        if (x >= threshold) {
            return x % n;
        }
    }
}

const FunctionProfile& require_profile(const std::vector<FunctionProfile>& profiles,
                                       std::string_view app) {
    const FunctionProfile* p = find_profile(profiles, app);
    if (p == nullptr) {
        throw UnknownAppError("no profile for application '" + std::string(app) + "'");
    }
    return *p;
}

std::vector<std::string> draw_pool(const std::vector<std::string>& pool,
                                   const std::vector<FunctionProfile>& profiles) {
    if (!pool.empty()) {
        for (const auto& app : pool) {
            (void)require_profile(profiles, app);
        }
        return pool;
    }
    std::vector<std::string> out;
    for (const auto& p : profiles) {
        if (p.calls_per_run == 1) {
            out.push_back(p.app_id);
        }
    }
    if (out.empty()) {
        throw InvalidArgument("no single-call profiles to draw applications from");
    }
    return out;
}

Arrival app_arrival(SimTime at, const FunctionProfile& p) {
    Arrival a;
    a.at = at;
    a.app_id = p.app_id;
    a.calls = p.calls_per_run;
    return a;
}

} // namespace

ArrivalSchedule gen_workload(const Workload& workload, const Background& background,
                             const std::vector<FunctionProfile>& profiles, std::uint64_t seed) {
    ArrivalSchedule s;
    std::mt19937_64 rng(seed);

    if (background.processes < 0 || background.waves < 0 || background.service.count() < 0.0) {
        throw InvalidArgument("background parameters must be >= 0");
    }
    if (background.waves > 0 && !(background.interval.count() > 0.0)) {
        throw InvalidArgument("background waves need a positive interval");
    }
    const std::int64_t bg_waves = background.waves > 0 ? background.waves : 1;
    for (std::int64_t w = 0; w < bg_waves; ++w) {
        for (std::int64_t i = 0; i < background.processes; ++i) {
            Arrival a;
            a.at = background.waves > 0 ? to_sim_time(background.interval * static_cast<double>(w))
                                        : SimTime{0};
            a.app_id = "background";
            a.background = true;
            a.service = to_sim_time(background.service);
            s.arrivals.push_back(std::move(a));
        }
    }

    std::visit(
        [&](const auto& w) {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, FixedSet>) {
                for (const auto& app : w.apps) {
                    s.arrivals.push_back(app_arrival(SimTime{0}, require_profile(profiles, app)));
                }
            } else if constexpr (std::is_same_v<T, RandomSet>) {
                if (w.n < 1) {
                    throw InvalidArgument("random set size must be >= 1");
                }
                auto pool = draw_pool(w.pool, profiles);
                if (!w.with_replacement && static_cast<std::size_t>(w.n) > pool.size()) {
                    throw InvalidArgument("cannot draw more applications than the pool holds "
                                          "without replacement");
                }
                for (std::int64_t i = 0; i < w.n; ++i) {
                    std::size_t pick;
                    if (w.with_replacement) {
                        pick = uniform_index(rng, pool.size());
                    } else {
                        auto rest = pool.size() - static_cast<std::size_t>(i);
                        pick = static_cast<std::size_t>(i) + uniform_index(rng, rest);
                        std::swap(pool[static_cast<std::size_t>(i)], pool[pick]);
                        pick = static_cast<std::size_t>(i);
                    }
                    s.arrivals.push_back(app_arrival(SimTime{0}, require_profile(profiles, pool[pick])));
                }
            } else if constexpr (std::is_same_v<T, Periodic>) {
                if (w.waves < 1 || w.apps_per_wave < 1 || !(w.interval.count() > 0.0)) {
                    throw InvalidArgument("periodic workload needs waves, apps and interval > 0");
                }
                auto pool = draw_pool(w.pool, profiles);
                for (std::int64_t k = 0; k < w.waves; ++k) {
                    auto at = to_sim_time(w.interval * static_cast<double>(k));
                    s.wave_starts.push_back(at);
                    for (std::int64_t j = 0; j < w.apps_per_wave; ++j) {
                        auto a = app_arrival(at, require_profile(profiles,
                                                                 pool[uniform_index(rng, pool.size())]));
                        a.wave = k;
                        s.arrivals.push_back(std::move(a));
                    }
                }
            } else if constexpr (std::is_same_v<T, Throughput>) {
                if (w.images < 1 || w.runs < 1 || !(w.duration.count() > 0.0)) {
                    throw InvalidArgument("throughput workload needs images, runs and duration > 0");
                }
                const auto& p = require_profile(profiles, w.app);
                for (std::int64_t r = 0; r < w.runs; ++r) {
                    auto a = app_arrival(to_sim_time(w.duration * static_cast<double>(r)), p);
                    a.calls = w.images;
                    a.deadline = to_sim_time(w.duration);
                    s.arrivals.push_back(std::move(a));
                }
            } else if constexpr (std::is_same_v<T, Mix>) {
                if (w.set_size < 1 || w.heavy_fraction < 0.0 || w.heavy_fraction > 1.0) {
                    throw InvalidArgument("mix needs set_size >= 1 and a fraction in [0, 1]");
                }
                const auto& heavy = require_profile(profiles, w.heavy_app);
                const auto& light = require_profile(profiles, w.light_app);
                auto n_heavy = static_cast<std::int64_t>(
                    std::llround(w.heavy_fraction * static_cast<double>(w.set_size)));
                for (std::int64_t i = 0; i < w.set_size; ++i) {
                    s.arrivals.push_back(app_arrival(SimTime{0}, i < n_heavy ? heavy : light));
                }
            }
        },
        workload);
    return s;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWorkEpsilon = 1e-6;  // us
constexpr int kX86 = 0;
constexpr int kArm = 1;
constexpr int kFpga = 2;

enum class Kind : std::uint8_t {
    ReconfigDone = 0,
    Completion = 1,
    Deadline = 2,
    WaveStart = 3,
    Arrival = 4,
    LoadSample = 5,
    FunctionCall = 6,
};

struct Event {
    SimTime t;
    Kind kind;
    std::uint64_t seq;
    int pool = -1;
    std::int64_t job = -1;
    std::uint64_t version = 0;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.seq > b.seq;
    }
};

enum class JobState { Pending, PreCall, Running, Done };

struct Job {
    const FunctionProfile* profile = nullptr;
    Arrival arrival;
    JobState state = JobState::Pending;
    std::optional<TargetKind> target;
    Load load_at_start = 0;
    std::int64_t calls_done = 0;
    SimTime call_start{0};
    double call_time_sum_us = 0.0;
    double remaining_us = 0.0;
    bool needs_config = false;
    bool terminated = false;
    std::int64_t result = -1;
};

struct CpuPool {
    std::int64_t cores = 1;
    std::vector<std::int64_t> members;
    SimTime last{0};
    std::uint64_t version = 0;
    double delivered_us = 0.0;
};

struct KernelUnit {
    std::deque<std::int64_t> queue;
    std::int64_t running = -1;
};

class Engine {
public:
    Engine(const SimScenario& sc, const RunOptions& opts) : sc_(sc), opts_(opts) {}

    SimMetrics run();

private:
    void push(SimTime t, Kind kind, int pool = -1, std::int64_t job = -1, std::uint64_t version = 0) {
        events_.push(Event{t, kind, seq_++, pool, job, version});
    }

    // CPU pools
    void advance(CpuPool& p);
    void reschedule(int pool);
    void pool_add(int pool, std::int64_t job, double work_us);
    void pool_remove(int pool, std::int64_t job);
    void on_pool_completion(int pool, std::uint64_t version);

    // FPGA device
    bool device_idle();
    void begin(const std::string& image_id);
    void try_start_unit(const std::string& kernel);
    void try_begin_for_blocked();
    void fpga_dispatch(std::int64_t job);
    void on_fpga_completion(std::int64_t job);
    void on_reconfig_done();
    SimTime fpga_service(const Job& job) const;

    // applications
    void on_arrival(std::int64_t job);
    void on_function_call(std::int64_t job);
    void on_deadline(std::int64_t job);
    void start_call(std::int64_t job);
    void on_call_complete(std::int64_t job);
    void finish_run(std::int64_t job, bool finished);
    TargetKind choose_target(Job& job);

    [[nodiscard]] std::int64_t runnable_x86() const {
        return static_cast<std::int64_t>(pools_[kX86].members.size()) + precall_;
    }
    [[nodiscard]] Millis now_ms() const { return to_millis(now_); }
    [[nodiscard]] const std::string& kernel_of(const Job& j) const {
        return j.profile->kernel->kernel_id;
    }

    const SimScenario& sc_;
    const RunOptions& opts_;

    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::uint64_t seq_ = 0;
    SimTime now_{0};

    std::vector<Job> jobs_;
    std::array<CpuPool, 2> pools_;
    std::int64_t precall_ = 0;
    Load sampled_load_ = 0;
    bool live_load_ = false;

    PackingPlan plan_;
    FpgaState fpga_;
    std::map<std::string, KernelUnit> units_;
    std::deque<std::int64_t> blocked_;

    ThresholdTable table_;
    SimMetrics metrics_;
    std::size_t fg_total_ = 0;
    std::size_t fg_arrived_ = 0;
    std::size_t fg_done_ = 0;
};

void Engine::advance(CpuPool& p) {
    auto dt = static_cast<double>((now_ - p.last).count());
    if (dt > 0.0 && !p.members.empty()) {
        const double rate =
            std::min(1.0, static_cast<double>(p.cores) / static_cast<double>(p.members.size()));
        const double step = dt * rate;
        for (auto m : p.members) {
            double& rem = jobs_[static_cast<std::size_t>(m)].remaining_us;
            if (rem != kInf) {
                p.delivered_us += std::min(step, std::max(rem, 0.0));
                rem -= step;
            }
        }
    }
    p.last = now_;
}

void Engine::reschedule(int pool) {
    CpuPool& p = pools_[static_cast<std::size_t>(pool)];
    ++p.version;
    if (p.members.empty()) {
        return;
    }
    double min_rem = kInf;
    for (auto m : p.members) {
        min_rem = std::min(min_rem, jobs_[static_cast<std::size_t>(m)].remaining_us);
    }
    if (min_rem == kInf) {
        return;
    }
    const double rate =
        std::min(1.0, static_cast<double>(p.cores) / static_cast<double>(p.members.size()));
    auto dt = std::max(0.0, std::ceil(min_rem / rate - kWorkEpsilon));
    push(now_ + SimTime{static_cast<SimTime::rep>(dt)}, Kind::Completion, pool, -1, p.version);
}

void Engine::pool_add(int pool, std::int64_t job, double work_us) {
    CpuPool& p = pools_[static_cast<std::size_t>(pool)];
    advance(p);
    jobs_[static_cast<std::size_t>(job)].remaining_us = work_us;
    p.members.push_back(job);
    reschedule(pool);
}

void Engine::pool_remove(int pool, std::int64_t job) {
    CpuPool& p = pools_[static_cast<std::size_t>(pool)];
    advance(p);
    std::erase(p.members, job);
    reschedule(pool);
}

void Engine::on_pool_completion(int pool, std::uint64_t version) {
    CpuPool& p = pools_[static_cast<std::size_t>(pool)];
    if (version != p.version) {
        return;
    }
    advance(p);
    std::vector<std::int64_t> done;
    for (auto m : p.members) {
        if (jobs_[static_cast<std::size_t>(m)].remaining_us <= kWorkEpsilon) {
            done.push_back(m);
        }
    }
    std::erase_if(p.members, [&](std::int64_t m) {
        return std::find(done.begin(), done.end(), m) != done.end();
    });
    reschedule(pool);
    for (auto m : done) {
        Job& j = jobs_[static_cast<std::size_t>(m)];
        if (j.arrival.background) {
            j.state = JobState::Done;
        } else {
            on_call_complete(m);
        }
    }
}

bool Engine::device_idle() {
    if (fpga_.busy()) {
        return false;
    }
    for (auto& [k, u] : units_) {
        while (!u.queue.empty() && jobs_[static_cast<std::size_t>(u.queue.front())].terminated) {
            u.queue.pop_front();
        }
        if (u.running >= 0 || !u.queue.empty()) {
            return false;
        }
    }
    return true;
}

void Engine::begin(const std::string& image_id) {
    auto r = begin_reconfiguration(fpga_, image_id, now_ms(), sc_.platform);
    if (r.busy) {
        ++metrics_.dropped_reconfigurations;
        return;
    }
    fpga_ = std::move(r.state);
    ++metrics_.reconfigurations;
    push(to_sim_time(fpga_.reconfiguring->completes_at), Kind::ReconfigDone);
}

SimTime Engine::fpga_service(const Job& job) const {
    return to_sim_time(job.profile->fpga_exec_total + sc_.platform.pcie_transfer_overhead);
}

void Engine::try_start_unit(const std::string& kernel) {
    auto it = units_.find(kernel);
    if (it == units_.end()) {
        return;
    }
    KernelUnit& u = it->second;
    if (fpga_.busy() || u.running >= 0 || !fpga_.has_kernel(kernel)) {
        return;
    }
    while (!u.queue.empty()) {
        auto j = u.queue.front();
        u.queue.pop_front();
        if (jobs_[static_cast<std::size_t>(j)].terminated) {
            continue;
        }
        u.running = j;
        push(now_ + fpga_service(jobs_[static_cast<std::size_t>(j)]), Kind::Completion, kFpga, j);
        return;
    }
}

void Engine::try_begin_for_blocked() {
    while (!blocked_.empty() && jobs_[static_cast<std::size_t>(blocked_.front())].terminated) {
        blocked_.pop_front();
    }
    if (blocked_.empty() || !device_idle()) {
        return;
    }
    const auto& kernel = kernel_of(jobs_[static_cast<std::size_t>(blocked_.front())]);
    const ConfigImage* img = image_for_kernel(plan_, kernel);
    if (img == nullptr) {
        throw UnknownKernelError("no configuration image holds kernel '" + kernel + "'");
    }
    begin(img->image_id);
}

void Engine::fpga_dispatch(std::int64_t job) {
    Job& j = jobs_[static_cast<std::size_t>(job)];
    const auto& kernel = kernel_of(j);
    const bool per_call =
        sc_.policy == Policy::AlwaysFPGA && sc_.fpga_baseline == FpgaBaselineConfig::PerCall;
    if (!per_call && fpga_.has_kernel(kernel)) {
        units_[kernel].queue.push_back(job);
        try_start_unit(kernel);
        return;
    }
    j.needs_config = per_call;
    blocked_.push_back(job);
    try_begin_for_blocked();
}

void Engine::on_fpga_completion(std::int64_t job) {
    Job& j = jobs_[static_cast<std::size_t>(job)];
    const std::string kernel = kernel_of(j);
    units_[kernel].running = -1;
    if (!j.terminated) {
        on_call_complete(job);
    }
    try_start_unit(kernel);
    try_begin_for_blocked();
}

void Engine::on_reconfig_done() {
    fpga_ = complete_reconfiguration(fpga_, fpga_.reconfiguring->completes_at);
    // Work queued for kernels that just left the device waits for them again.
    for (auto& [kernel, u] : units_) {
        if (!fpga_.has_kernel(kernel)) {
            for (auto j : u.queue) {
                blocked_.push_back(j);
            }
            u.queue.clear();
        }
    }
    // A per-call configuration serves exactly one waiting call.
    bool served_per_call = false;
    std::deque<std::int64_t> still_blocked;
    for (auto j : blocked_) {
        Job& job = jobs_[static_cast<std::size_t>(j)];
        if (job.terminated) {
            continue;
        }
        if (fpga_.has_kernel(kernel_of(job)) && !(job.needs_config && served_per_call)) {
            served_per_call = served_per_call || job.needs_config;
            job.needs_config = false;
            units_[kernel_of(job)].queue.push_back(j);
        } else {
            still_blocked.push_back(j);
        }
    }
    blocked_.swap(still_blocked);
    for (const auto& kernel : fpga_.available_kernels) {
        try_start_unit(kernel);
    }
    try_begin_for_blocked();
}

void Engine::on_arrival(std::int64_t job) {
    Job& j = jobs_[static_cast<std::size_t>(job)];
    if (j.arrival.background) {
        j.state = JobState::Running;
        double work = j.arrival.service.count() > 0 ? static_cast<double>(j.arrival.service.count())
                                                    : kInf;
        pool_add(kX86, job, work);
        return;
    }
    ++fg_arrived_;
    j.state = JobState::PreCall;
    ++precall_;
    if (j.arrival.deadline) {
        push(now_ + *j.arrival.deadline, Kind::Deadline, -1, job);
    }
    push(now_, Kind::FunctionCall, -1, job);
}

TargetKind Engine::choose_target(Job& job) {
    const FunctionProfile& p = *job.profile;
    switch (sc_.policy) {
    case Policy::XarTrek: {
        auto it = table_.find(p.app_id);
        if (it == table_.end()) {
            throw UnknownAppError("no threshold entry for application '" + p.app_id + "'");
        }
        auto d = decide(job.load_at_start, it->second, fpga_);
        if (d.reconfigure) {
            if (device_idle()) {
                begin(*d.reconfigure);
            } else {
                ++metrics_.dropped_reconfigurations;
            }
        }
        return d.target;
    }
    case Policy::AlwaysX86: return TargetKind::X86;
    case Policy::AlwaysARM: return TargetKind::ARM;
    case Policy::AlwaysFPGA: return TargetKind::FPGA;
    }
    return TargetKind::X86;
}

void Engine::on_function_call(std::int64_t job) {
    Job& j = jobs_[static_cast<std::size_t>(job)];
    if (j.terminated || j.state != JobState::PreCall) {
        return;
    }
    j.load_at_start = live_load_ ? runnable_x86() : sampled_load_;
    auto target = choose_target(j);
    const FunctionProfile& p = *j.profile;
    if (target == TargetKind::ARM && (!p.arm_exec_total || sc_.platform.arm_cores < 1)) {
        throw InvalidArgument("application '" + p.app_id + "' cannot run on ARM");
    }
    if (target == TargetKind::FPGA && !p.kernel) {
        throw NoKernelError("application '" + p.app_id + "' has no hardware kernel");
    }
    j.target = target;
    ++metrics_.migrations[to_flag(target)];
    --precall_;
    j.state = JobState::Running;
    start_call(job);
}

void Engine::start_call(std::int64_t job) {
    Job& j = jobs_[static_cast<std::size_t>(job)];
    j.call_start = now_;
    const FunctionProfile& p = *j.profile;
    switch (*j.target) {
    case TargetKind::X86:
        pool_add(kX86, job, static_cast<double>(to_sim_time(p.x86_exec_isolated).count()));
        break;
    case TargetKind::ARM:
        pool_add(kArm, job,
                 static_cast<double>(
                     to_sim_time(*p.arm_exec_total + sc_.platform.ethernet_migration_overhead)
                         .count()));
        break;
    case TargetKind::FPGA: fpga_dispatch(job); break;
    }
}

void Engine::on_call_complete(std::int64_t job) {
    Job& j = jobs_[static_cast<std::size_t>(job)];
    ++j.calls_done;
    j.call_time_sum_us += static_cast<double>((now_ - j.call_start).count());
    if (j.calls_done < j.arrival.calls) {
        start_call(job);
    } else {
        finish_run(job, true);
    }
}

void Engine::on_deadline(std::int64_t job) {
    Job& j = jobs_[static_cast<std::size_t>(job)];
    if (j.state == JobState::Done) {
        return;
    }
    j.terminated = true;
    if (j.state == JobState::PreCall) {
        --precall_;
    } else if (j.state == JobState::Running && j.target) {
        if (*j.target == TargetKind::X86) {
            pool_remove(kX86, job);
        } else if (*j.target == TargetKind::ARM) {
            pool_remove(kArm, job);
        } else {
            // Queued entries are skipped lazily; a running kernel finishes unobserved.
            std::erase(blocked_, job);
        }
    }
    finish_run(job, false);
}

void Engine::finish_run(std::int64_t job, bool finished) {
    Job& j = jobs_[static_cast<std::size_t>(job)];
    j.state = JobState::Done;
    ++fg_done_;
    AppResult& r = metrics_.apps[static_cast<std::size_t>(j.result)];
    r.completion = to_millis(now_ - j.arrival.at);
    r.target = j.target.value_or(TargetKind::X86);
    r.calls_completed = j.calls_done;
    r.finished = finished;
    metrics_.makespan = std::max(metrics_.makespan, now_ms());

    if (sc_.policy == Policy::XarTrek && j.target && j.calls_done > 0) {
        auto it = table_.find(j.profile->app_id);
        ExecutionRecord rec{j.profile->app_id, *j.target,
                            Millis{j.call_time_sum_us / static_cast<double>(j.calls_done) / 1000.0},
                            j.load_at_start};
        if (it != table_.end() && rec.exec_time.count() > 0.0) {
            it->second = update_on_completion(it->second, rec);
        }
    }
}

SimMetrics Engine::run() {
    sc_.platform.validate();
    for (const auto& p : sc_.profiles) {
        p.validate();
    }
    pools_[kX86].cores = sc_.platform.x86_cores;
    pools_[kArm].cores = std::max<std::int64_t>(sc_.platform.arm_cores, 1);
    live_load_ = !(sc_.platform.load_sampler_period.count() > 0.0);

    if (sc_.plan) {
        plan_ = *sc_.plan;
    } else if (sc_.platform.fpga_area_capacity > 0.0) {
        plan_ = pack_auto(kernels_of(sc_.profiles), sc_.platform.fpga_area_capacity);
    }
    std::optional<std::string> initial;
    if (sc_.initial_image) {
        if (!sc_.initial_image->empty()) {
            initial = *sc_.initial_image;
        }
    } else if (!plan_.empty()) {
        initial = plan_.front().image_id;
    }
    fpga_ = FpgaState::with_plan(plan_, initial);
    for (const auto& img : plan_) {
        for (const auto& k : img.kernels) {
            units_[k.kernel_id];
        }
    }

    if (sc_.policy == Policy::XarTrek) {
        if (sc_.thresholds) {
            table_ = *sc_.thresholds;
            for (auto& [app, e] : table_) {
                if (const auto* p = find_profile(sc_.profiles, app)) {
                    seed_last_exec(e, *p);
                }
            }
        } else {
            table_ = estimate_table(sc_.profiles, sc_.platform, processor_sharing_model(),
                                    sc_.max_load);
        }
    }

    auto schedule = gen_workload(sc_.workload, sc_.background, sc_.profiles, sc_.seed);
    jobs_.reserve(schedule.arrivals.size());
    for (auto& a : schedule.arrivals) {
        Job j;
        if (!a.background) {
            j.profile = &require_profile(sc_.profiles, a.app_id);
            j.result = static_cast<std::int64_t>(metrics_.apps.size());
            AppResult r;
            r.app_id = a.app_id;
            r.arrival = to_millis(a.at);
            metrics_.apps.push_back(std::move(r));
            ++fg_total_;
        }
        j.arrival = std::move(a);
        jobs_.push_back(std::move(j));
    }
    for (std::size_t k = 0; k < schedule.wave_starts.size(); ++k) {
        push(schedule.wave_starts[k], Kind::WaveStart, -1, static_cast<std::int64_t>(k));
    }
    for (std::size_t i = 0; i < jobs_.size(); ++i) {
        if (jobs_[i].arrival.wave < 0) {
            push(jobs_[i].arrival.at, Kind::Arrival, -1, static_cast<std::int64_t>(i));
        }
    }
    if (!live_load_ && fg_total_ > 0) {
        push(SimTime{0}, Kind::LoadSample);
    }

    const SimTime cap = to_sim_time(sc_.time_cap);
    while (fg_done_ < fg_total_ && !events_.empty()) {
        Event ev = events_.top();
        events_.pop();
        if (ev.t > cap) {
            throw SimTimeoutError("scenario '" + sc_.id + "' exceeded the simulated time cap");
        }
        now_ = ev.t;
        switch (ev.kind) {
        case Kind::ReconfigDone: on_reconfig_done(); break;
        case Kind::Completion:
            if (ev.pool == kFpga) {
                on_fpga_completion(ev.job);
            } else {
                on_pool_completion(ev.pool, ev.version);
            }
            break;
        case Kind::Deadline: on_deadline(ev.job); break;
        case Kind::WaveStart:
            for (std::size_t i = 0; i < jobs_.size(); ++i) {
                if (jobs_[i].arrival.wave == ev.job) {
                    push(now_, Kind::Arrival, -1, static_cast<std::int64_t>(i));
                }
            }
            break;
        case Kind::Arrival: on_arrival(ev.job); break;
        case Kind::LoadSample:
            sampled_load_ = runnable_x86();
            if (fg_done_ < fg_total_) {
                push(now_ + to_sim_time(sc_.platform.load_sampler_period), Kind::LoadSample);
            }
            break;
        case Kind::FunctionCall: on_function_call(ev.job); break;
        }
        if (opts_.observer) {
            Snapshot s;
            s.now = now_;
            s.total = fg_total_;
            s.completed = fg_done_;
            s.in_flight = fg_arrived_ - fg_done_;
            s.not_started = fg_total_ - fg_arrived_;
            s.runnable_x86 = runnable_x86();
            s.sampled_load = sampled_load_;
            opts_.observer(s);
        }
    }
    if (fg_done_ < fg_total_) {
        throw SimTimeoutError("scenario '" + sc_.id + "' stalled with unfinished applications");
    }

    for (int p : {kX86, kArm}) {
        advance(pools_[static_cast<std::size_t>(p)]);
        metrics_.cpu_work_delivered[static_cast<std::size_t>(p)] =
            pools_[static_cast<std::size_t>(p)].delivered_us / 1000.0;
    }
    if (!metrics_.apps.empty()) {
        double sum = 0.0;
        for (const auto& r : metrics_.apps) {
            sum += r.completion.count();
        }
        metrics_.mean_completion = Millis{sum / static_cast<double>(metrics_.apps.size())};
    }
    double deadline_rate = 0.0;
    std::size_t deadline_runs = 0;
    for (const auto& j : jobs_) {
        if (!j.arrival.background && j.arrival.deadline) {
            deadline_rate += static_cast<double>(j.calls_done) /
                             (static_cast<double>(j.arrival.deadline->count()) / 1e6);
            ++deadline_runs;
        }
    }
    if (deadline_runs > 0) {
        metrics_.throughput = deadline_rate / static_cast<double>(deadline_runs);
    } else if (metrics_.makespan.count() > 0.0) {
        metrics_.throughput =
            static_cast<double>(metrics_.apps.size()) / (metrics_.makespan.count() / 1000.0);
    }
    metrics_.final_thresholds = table_;
    return std::move(metrics_);
}

Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    if (xs.empty()) {
        return a;
    }
    for (double x : xs) {
        a.mean += x;
    }
    a.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) {
        var += (x - a.mean) * (x - a.mean);
    }
    a.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return a;
}

} // namespace

SimMetrics run(const SimScenario& scenario, const RunOptions& options) {
    Engine engine(scenario, options);
    return engine.run();
}

RepeatedMetrics run_repeated(const SimScenario& scenario, std::int64_t repeats) {
    if (repeats < 1) {
        throw InvalidArgument("repeats must be >= 1");
    }
    RepeatedMetrics out;
    std::vector<double> means;
    std::vector<double> rates;
    for (std::int64_t i = 0; i < repeats; ++i) {
        SimScenario sc = scenario;
        sc.seed = scenario.seed + static_cast<std::uint64_t>(i);
        out.runs.push_back(run(sc));
        means.push_back(out.runs.back().mean_completion.count());
        rates.push_back(out.runs.back().throughput);
    }
    out.mean_completion_ms = aggregate(means);
    out.throughput = aggregate(rates);
    return out;
}

void write_metrics_header(std::ostream& out) {
    out << "scenario_id,policy,repeat,app_id,completion_ms,target_executed,calls_completed\n";
}

void write_metrics_rows(std::ostream& out, const std::string& scenario_id, Policy policy,
                        std::int64_t repeat, const SimMetrics& metrics) {
    for (const auto& r : metrics.apps) {
        out << scenario_id << ',' << to_string(policy) << ',' << repeat << ',' << r.app_id << ','
            << kv::format_number(r.completion.count()) << ',' << xartrek::to_string(r.target) << ','
            << r.calls_completed << '\n';
    }
}

} // namespace xartrek::sim
