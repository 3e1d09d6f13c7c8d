#pragma once

// Deterministic discrete-event simulation of an x86 host with an ARM server
// and a PCIe FPGA attached.
//
//  * x86 and ARM are processor-sharing pools: n jobs on c cores each progress
//    at rate min(1, c/n), re-scaled whenever occupancy changes.
//  * The FPGA runs one FIFO compute unit per loaded kernel. A kernel can only
//    start while its image is loaded and no reconfiguration is in flight.
//  * An application asks the scheduler once, when it starts, and runs all of
//    its calls on the chosen target; it reports its mean call time when it
//    ends. Background processes only occupy x86 cores.
//
// Simulated time is kept in integer microseconds.

#include "xartrek/packer.hpp"
#include "xartrek/platform.hpp"
#include "xartrek/scheduler.hpp"
#include "xartrek/threshold.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace xartrek::sim {

using SimTime = std::chrono::microseconds;

[[nodiscard]] SimTime to_sim_time(Millis ms);
[[nodiscard]] Millis to_millis(SimTime t);

enum class Policy { XarTrek, AlwaysX86, AlwaysARM, AlwaysFPGA };

[[nodiscard]] std::string_view to_string(Policy p) noexcept;
/// "xartrek", "x86", "arm", "fpga" (also "always-x86" etc.).
[[nodiscard]] std::optional<Policy> parse_policy(std::string_view text) noexcept;

/// How the always-FPGA baseline gets its kernel: from the image loaded at
/// start, or by programming the device before every call.
enum class FpgaBaselineConfig { Preloaded, PerCall };

struct FixedSet {
    std::vector<std::string> apps;
};
/// `n` applications drawn uniformly from `pool` (all single-call profiles when empty).
struct RandomSet {
    std::int64_t n = 1;
    bool with_replacement = true;
    std::vector<std::string> pool;
};
/// `waves` sets of `apps_per_wave` random applications, one set every `interval`.
struct Periodic {
    std::int64_t waves = 1;
    std::int64_t apps_per_wave = 1;
    Millis interval{30000.0};
    std::vector<std::string> pool;
};
/// `runs` back-to-back runs of `app`, each processing up to `images` items
/// and terminated after `duration`.
struct Throughput {
    std::string app;
    std::int64_t images = 1000;
    Millis duration{60000.0};
    std::int64_t runs = 1;
};
/// `set_size` applications, round(heavy_fraction * set_size) of them `heavy`.
struct Mix {
    std::int64_t set_size = 10;
    std::string heavy_app;
    std::string light_app;
    double heavy_fraction = 0.0;
};

using Workload = std::variant<FixedSet, RandomSet, Periodic, Throughput, Mix>;

/// x86-only load. `service` of 0 keeps the processes alive until the last
/// application finishes. With `waves` > 0, `processes` new ones arrive every
/// `interval` instead of once at time 0.
struct Background {
    std::int64_t processes = 0;
    Millis service{0.0};
    std::int64_t waves = 0;
    Millis interval{0.0};
};

struct SimScenario {
    std::string id = "scenario";
    PlatformSpec platform;
    std::vector<FunctionProfile> profiles;
    /// Threshold table for XarTrek; estimated from the profiles when absent.
    std::optional<ThresholdTable> thresholds;
    Load max_load = 200;
    Workload workload = FixedSet{};
    Background background;
    Policy policy = Policy::XarTrek;
    std::uint64_t seed = 1;
    /// Packing of the profiles' kernels; pack_auto() at platform capacity when absent.
    std::optional<PackingPlan> plan;
    /// Image loaded at time 0. Unset means the plan's first image; "" means none.
    std::optional<std::string> initial_image;
    FpgaBaselineConfig fpga_baseline = FpgaBaselineConfig::Preloaded;
    Millis time_cap{24.0 * 3600.0 * 1000.0};
};

/// One scheduled process start.
struct Arrival {
    SimTime at{0};
    std::string app_id;
    bool background = false;
    std::int64_t calls = 1;
    /// Run is cut off this long after it arrives.
    std::optional<SimTime> deadline;
    /// Background service demand; zero means persistent.
    SimTime service{0};
    /// Wave that releases this arrival, or -1 when released at its time.
    std::int64_t wave = -1;
};

struct ArrivalSchedule {
    std::vector<Arrival> arrivals;
    std::vector<SimTime> wave_starts;

    [[nodiscard]] std::size_t foreground_count() const;
};

/// Seeded, platform-independent schedule for a workload and its background.
[[nodiscard]] ArrivalSchedule gen_workload(const Workload& workload, const Background& background,
                                           const std::vector<FunctionProfile>& profiles,
                                           std::uint64_t seed);

struct AppResult {
    std::string app_id;
    Millis arrival{0.0};
    Millis completion{0.0};
    TargetKind target = TargetKind::X86;
    std::int64_t calls_completed = 0;
    /// False when the run was cut off by its deadline.
    bool finished = true;
};

struct SimMetrics {
    std::vector<AppResult> apps;
    Millis mean_completion{0.0};
    /// Items per second: per-run calls / duration for deadline runs,
    /// completed applications / makespan otherwise.
    double throughput = 0.0;
    std::array<std::int64_t, 3> migrations{};
    std::int64_t reconfigurations = 0;
    std::int64_t dropped_reconfigurations = 0;
    Millis makespan{0.0};
    /// Isolated-time demand delivered by each CPU pool (x86, ARM), in ms.
    std::array<double, 2> cpu_work_delivered{};
    ThresholdTable final_thresholds;
};

/// State after every processed event; used to check conservation properties.
struct Snapshot {
    SimTime now{0};
    std::size_t total = 0;
    std::size_t completed = 0;
    std::size_t in_flight = 0;
    std::size_t not_started = 0;
    std::int64_t runnable_x86 = 0;
    Load sampled_load = 0;
};

struct RunOptions {
    std::function<void(const Snapshot&)> observer;
};

/// Throws UnknownAppError for apps without a profile (or threshold entry),
/// SimTimeoutError when the time cap is reached, NoKernelError when FPGA
/// execution is forced on a profile without a kernel.
[[nodiscard]] SimMetrics run(const SimScenario& scenario, const RunOptions& options = {});

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
};

struct RepeatedMetrics {
    std::vector<SimMetrics> runs;
    Aggregate mean_completion_ms;
    Aggregate throughput;
};

/// Repeat i runs with seed + i. Population standard deviation.
[[nodiscard]] RepeatedMetrics run_repeated(const SimScenario& scenario, std::int64_t repeats);

/// scenario_id,policy,repeat,app_id,completion_ms,target_executed,calls_completed
void write_metrics_header(std::ostream& out);
void write_metrics_rows(std::ostream& out, const std::string& scenario_id, Policy policy,
                        std::int64_t repeat, const SimMetrics& metrics);

} // namespace xartrek::sim
