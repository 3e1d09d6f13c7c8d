#pragma once

#include "xartrek/platform.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <string>

namespace xartrek {

/// Migration thresholds of one application plus the most recent observed
/// execution time on each target (the comparands of the online update).
struct ThresholdEntry {
    std::string app_id;
    std::string kernel_id;
    Load fpga_thr = 0;
    Load arm_thr = 0;
    Millis last_x86_exec{0.0};
    Millis last_arm_exec{0.0};
    Millis last_fpga_exec{0.0};

    friend bool operator==(const ThresholdEntry&, const ThresholdEntry&) = default;
};

struct ExecutionRecord {
    std::string app_id;
    TargetKind target = TargetKind::X86;
    Millis exec_time{0.0};
    Load load_at_start = 0;

    friend bool operator==(const ExecutionRecord&, const ExecutionRecord&) = default;
};

using ThresholdTable = std::map<std::string, ThresholdEntry, std::less<>>;

using CostModel = std::function<Millis(const FunctionProfile&, TargetKind, const SystemState&,
                                       const PlatformSpec&)>;

/// Default cost model: processor sharing, see exec_time().
[[nodiscard]] CostModel processor_sharing_model();

/// Offline calibration. For each migration target, the threshold is the
/// largest x86 load n in [0, max_load] at which running on x86 still takes no
/// longer than the target's isolated end-to-end time; 0 when x86 is already
/// slower in isolation. A target the profile cannot use gets max_load.
/// The cost model must be non-decreasing in the x86 load.
[[nodiscard]] ThresholdEntry estimate_thresholds(const FunctionProfile& profile,
                                                 const PlatformSpec& spec,
                                                 const CostModel& cost_model, Load max_load);

[[nodiscard]] ThresholdTable estimate_table(const std::vector<FunctionProfile>& profiles,
                                            const PlatformSpec& spec, const CostModel& cost_model,
                                            Load max_load);

/// Threshold increase step used after a slow ARM/FPGA run: +10%, at least +1.
[[nodiscard]] constexpr Load increase_threshold(Load t) noexcept {
    Load step = (t + 9) / 10;
    return t + (step < 1 ? 1 : step);
}

/// Dynamic update applied when an application reports its execution time.
///
/// x86 run: a run slower than the last FPGA (or ARM) run at a load below
/// that threshold pulls the threshold down to the observed load; only the
/// first matching branch fires. last_x86_exec is refreshed in every case.
/// ARM/FPGA run: records the time and raises that target's threshold when
/// the run was slower than the last x86 run.
///
/// Throws MismatchedAppError when the record belongs to another app and
/// InvalidArgument for a non-positive time or negative load.
[[nodiscard]] ThresholdEntry update_on_completion(const ThresholdEntry& entry,
                                                  const ExecutionRecord& rec);

/// Fills zero last_* fields from the profile's calibrated times.
void seed_last_exec(ThresholdEntry& entry, const FunctionProfile& profile);

// CSV: app_id,kernel_id,fpga_thr,arm_thr[,last_x86_exec,last_arm_exec,last_fpga_exec]
[[nodiscard]] ThresholdTable read_table(std::istream& in);
[[nodiscard]] ThresholdTable table_load(const std::string& path);
void write_table(std::ostream& out, const ThresholdTable& table);
void table_store(const ThresholdTable& table, const std::string& path);

} // namespace xartrek
