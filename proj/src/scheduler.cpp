#include "xartrek/scheduler.hpp"

#include "xartrek/error.hpp"

namespace xartrek {

namespace {

std::set<std::string, std::less<>> kernel_set(const ConfigImage& img) {
    std::set<std::string, std::less<>> out;
    for (const auto& k : img.kernels) {
        out.insert(k.kernel_id);
    }
    return out;
}

const ConfigImage* find_image(const PackingPlan& plan, std::string_view image_id) {
    for (const auto& img : plan) {
        if (img.image_id == image_id) {
            return &img;
        }
    }
    return nullptr;
}

} // namespace

FpgaState FpgaState::with_plan(PackingPlan plan, std::optional<std::string> image_id) {
    FpgaState s;
    s.plan = std::move(plan);
    if (image_id) {
        const ConfigImage* img = find_image(s.plan, *image_id);
        if (img == nullptr) {
            throw UnknownImageError("image '" + *image_id + "' is not in the plan");
        }
        s.available_kernels = kernel_set(*img);
        s.loaded_image = std::move(image_id);
    }
    return s;
}

MigrationDecision decide(Load load, const ThresholdEntry& entry, const FpgaState& fpga) {
    if (load < 0) {
        throw InvalidArgument("load must be >= 0");
    }
    const bool over_fpga = load > entry.fpga_thr;
    const bool over_arm = load > entry.arm_thr;

    if (!over_fpga) {
        return MigrationDecision{over_arm ? TargetKind::ARM : TargetKind::X86, std::nullopt};
    }
    if (!entry.kernel_id.empty() && fpga.has_kernel(entry.kernel_id)) {
        // The smaller threshold marks the faster target; a tie goes to ARM.
        return MigrationDecision{entry.fpga_thr < entry.arm_thr ? TargetKind::FPGA : TargetKind::ARM,
                                 std::nullopt};
    }
    const ConfigImage* img = image_for_kernel(fpga.plan, entry.kernel_id);
    if (entry.kernel_id.empty() || img == nullptr) {
        throw UnknownKernelError("no configuration image holds kernel '" + entry.kernel_id +
                                 "' of app '" + entry.app_id + "'");
    }
    return MigrationDecision{over_arm ? TargetKind::ARM : TargetKind::X86, img->image_id};
}

BeginResult begin_reconfiguration(const FpgaState& fpga, const std::string& image_id, Millis now,
                                  const PlatformSpec& spec) {
    if (find_image(fpga.plan, image_id) == nullptr) {
        throw UnknownImageError("image '" + image_id + "' is not in the plan");
    }
    if (fpga.busy()) {
        return BeginResult{fpga, true};
    }
    FpgaState next = fpga;
    next.reconfiguring = PendingReconfiguration{image_id, now + spec.reconfig_latency};
    return BeginResult{std::move(next), false};
}

FpgaState complete_reconfiguration(const FpgaState& fpga, Millis now) {
    if (!fpga.reconfiguring) {
        throw ContractViolation("no reconfiguration in flight");
    }
    if (now < fpga.reconfiguring->completes_at) {
        throw ContractViolation("reconfiguration completed before its completion time");
    }
    const ConfigImage* img = find_image(fpga.plan, fpga.reconfiguring->image_id);
    if (img == nullptr) {
        throw UnknownImageError("image '" + fpga.reconfiguring->image_id + "' left the plan");
    }
    FpgaState next = fpga;
    next.available_kernels = kernel_set(*img);
    next.loaded_image = img->image_id;
    next.reconfiguring.reset();
    return next;
}

} // namespace xartrek
