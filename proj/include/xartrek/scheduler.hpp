#pragma once

#include "xartrek/packer.hpp"
#include "xartrek/platform.hpp"
#include "xartrek/threshold.hpp"

#include <optional>
#include <set>
#include <string>

namespace xartrek {

struct PendingReconfiguration {
    std::string image_id;
    Millis completes_at{0.0};

    friend bool operator==(const PendingReconfiguration&, const PendingReconfiguration&) = default;
};

/// What the scheduler knows about the FPGA. `available_kernels` only changes
/// when a reconfiguration completes; while one is in flight it still reports
/// the previous image's kernels.
struct FpgaState {
    std::optional<std::string> loaded_image;
    std::set<std::string, std::less<>> available_kernels;
    std::optional<PendingReconfiguration> reconfiguring;
    PackingPlan plan;

    /// Fresh state over `plan`, optionally with `image_id` already loaded.
    [[nodiscard]] static FpgaState with_plan(PackingPlan plan,
                                             std::optional<std::string> image_id = std::nullopt);

    [[nodiscard]] bool busy() const noexcept { return reconfiguring.has_value(); }
    [[nodiscard]] bool has_kernel(std::string_view kernel_id) const {
        return available_kernels.find(kernel_id) != available_kernels.end();
    }

    friend bool operator==(const FpgaState&, const FpgaState&) = default;
};

struct MigrationDecision {
    TargetKind target = TargetKind::X86;
    /// Image to load while the function runs on a CPU; never set with FPGA.
    std::optional<std::string> reconfigure;

    [[nodiscard]] std::uint8_t flag() const noexcept { return to_flag(target); }
    friend bool operator==(const MigrationDecision&, const MigrationDecision&) = default;
};

/// Scheduling policy for one request. With K = kernel currently available:
///   load <= arm_thr, load <= fpga_thr         -> x86
///   load >  arm_thr, load <= fpga_thr         -> ARM
///   load >  fpga_thr, K                       -> FPGA if fpga_thr < arm_thr, else ARM
///   load >  fpga_thr, !K, load <= arm_thr     -> x86 + reconfigure
///   load >  fpga_thr, !K, load >  arm_thr     -> ARM + reconfigure
/// Throws UnknownKernelError when a reconfiguration is needed but no image in
/// the plan holds the kernel, InvalidArgument for a negative load.
[[nodiscard]] MigrationDecision decide(Load load, const ThresholdEntry& entry,
                                       const FpgaState& fpga);

struct BeginResult {
    FpgaState state;
    /// True when a reconfiguration was already in flight; state is unchanged.
    bool busy = false;
};

/// Throws UnknownImageError when `image_id` is not part of the plan.
[[nodiscard]] BeginResult begin_reconfiguration(const FpgaState& fpga, const std::string& image_id,
                                                Millis now, const PlatformSpec& spec);

/// Throws ContractViolation when idle or called before the completion time.
[[nodiscard]] FpgaState complete_reconfiguration(const FpgaState& fpga, Millis now);

[[nodiscard]] inline std::set<std::string, std::less<>> query_kernels(const FpgaState& fpga) {
    return fpga.available_kernels;
}

} // namespace xartrek
