#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xartrek {

using Millis = std::chrono::duration<double, std::milli>;

/// x86 load reading: number of runnable processes on the x86 host.
using Load = std::int64_t;

enum class TargetKind : std::uint8_t { X86 = 0, ARM = 1, FPGA = 2 };

/// Migration flag value carried on the wire (0 x86, 1 ARM, 2 FPGA).
[[nodiscard]] constexpr std::uint8_t to_flag(TargetKind t) noexcept {
    return static_cast<std::uint8_t>(t);
}
[[nodiscard]] std::optional<TargetKind> target_from_flag(std::uint8_t flag) noexcept;
[[nodiscard]] std::string_view to_string(TargetKind t) noexcept;
/// Accepts "x86", "arm", "fpga" (any case) or the flag digits.
[[nodiscard]] std::optional<TargetKind> parse_target(std::string_view text) noexcept;

struct PlatformSpec {
    std::int64_t x86_cores = 6;
    std::int64_t arm_cores = 96;
    double fpga_area_capacity = 100.0;
    Millis reconfig_latency{400.0};
    /// Added to every ARM run; calibrated totals already include it, hence 0.
    Millis ethernet_migration_overhead{0.0};
    /// Added to every FPGA invocation; 0 for the same reason.
    Millis pcie_transfer_overhead{0.0};
    Millis load_sampler_period{100.0};

    /// Throws InvalidArgument on a violated invariant.
    void validate() const;
};

/// Hardware kernel synthesized for one function; `area` is a scalar
/// abstraction of LUT/FF/BRAM/DSP usage.
struct KernelResource {
    std::string kernel_id;
    double area = 0.0;
    std::string function_id;

    friend bool operator==(const KernelResource&, const KernelResource&) = default;
};

/// Calibrated end-to-end times of one selected function on each target.
struct FunctionProfile {
    std::string function_id;
    std::string app_id;
    Millis x86_exec_isolated{0.0};
    /// Absent when the function was never measured on ARM.
    std::optional<Millis> arm_exec_total;
    Millis fpga_exec_total{0.0};
    std::optional<KernelResource> kernel;
    std::int64_t calls_per_run = 1;

    void validate() const;
    friend bool operator==(const FunctionProfile&, const FunctionProfile&) = default;
};

struct SystemState {
    std::int64_t runnable_x86_processes = 0;
    std::int64_t runnable_arm_processes = 0;
    std::int64_t fpga_queue_depth = 0;
    Millis clock{0.0};
};

enum class LoadClass { Low, Medium, High };

[[nodiscard]] std::string_view to_string(LoadClass c) noexcept;

/// Processor-sharing execution time of `profile` on `target` under `state`.
/// Throws NoKernelError for FPGA when the profile has no kernel, and
/// InvalidArgument for ARM when the profile has no ARM measurement.
[[nodiscard]] Millis exec_time(const FunctionProfile& profile, TargetKind target,
                               const SystemState& state, const PlatformSpec& spec);

[[nodiscard]] constexpr Load sample_load(const SystemState& state) noexcept {
    return state.runnable_x86_processes;
}

/// Both boundaries (n == x86_cores, n == x86_cores + arm_cores) are Medium.
[[nodiscard]] LoadClass classify_load(std::int64_t n_processes, const PlatformSpec& spec);

// Profile file ([function] records) and platform file ([platform] record).
[[nodiscard]] std::vector<FunctionProfile> read_profiles(std::istream& in);
[[nodiscard]] std::vector<FunctionProfile> load_profiles(const std::string& path);
void write_profiles(std::ostream& out, const std::vector<FunctionProfile>& profiles);

[[nodiscard]] PlatformSpec read_platform(std::istream& in);
[[nodiscard]] PlatformSpec load_platform(const std::string& path);
void write_platform(std::ostream& out, const PlatformSpec& spec);

/// Finds the profile for `app_id`; nullptr when absent.
[[nodiscard]] const FunctionProfile* find_profile(const std::vector<FunctionProfile>& profiles,
                                                  std::string_view app_id) noexcept;

} // namespace xartrek
