#pragma once

#include "xartrek/platform.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace xartrek {

/// One FPGA configuration image (an XCLBIN): the kernels loaded together.
struct ConfigImage {
    std::string image_id;
    std::vector<KernelResource> kernels;
    double total_area = 0.0;

    [[nodiscard]] bool contains(std::string_view kernel_id) const noexcept;
    friend bool operator==(const ConfigImage&, const ConfigImage&) = default;
};

using PackingPlan = std::vector<ConfigImage>;

/// First-fit decreasing by area (ties by kernel_id). Images are named
/// xclbin-0, xclbin-1, ... in creation order.
[[nodiscard]] PackingPlan pack_auto(std::vector<KernelResource> kernels, double capacity);

/// Builds images from an explicit kernel_id -> image_id map. Images appear in
/// order of first use by the kernel list.
[[nodiscard]] PackingPlan pack_manual(const std::map<std::string, std::string>& assignments,
                                      const std::vector<KernelResource>& kernels, double capacity);

/// Distinct kernels referenced by `profiles`, in profile order.
[[nodiscard]] std::vector<KernelResource> kernels_of(const std::vector<FunctionProfile>& profiles);

struct ImageUtilization {
    std::string image_id;
    std::size_t kernel_count = 0;
    double used_area = 0.0;
    double utilization = 0.0;
};

struct PlanSummary {
    double capacity = 0.0;
    std::vector<ImageUtilization> images;

    [[nodiscard]] std::size_t image_count() const noexcept { return images.size(); }
};

[[nodiscard]] PlanSummary plan_summary(const PackingPlan& plan, double capacity);
void print_summary(std::ostream& out, const PlanSummary& summary);
void write_summary_csv(std::ostream& out, const PlanSummary& summary);

/// image_id,kernel_id,area rows.
void write_plan_csv(std::ostream& out, const PackingPlan& plan);
/// [image] records with repeated `kernel = <id> <area>` lines.
void write_plan_text(std::ostream& out, const PackingPlan& plan);
[[nodiscard]] PackingPlan read_plan_text(std::istream& in);
[[nodiscard]] PackingPlan load_plan(const std::string& path);

/// Lowest image_id (in plan order) holding `kernel_id`; nullptr when none.
[[nodiscard]] const ConfigImage* image_for_kernel(const PackingPlan& plan,
                                                  std::string_view kernel_id) noexcept;

} // namespace xartrek
