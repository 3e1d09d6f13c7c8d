#include "xartrek/packer.hpp"

#include "xartrek/error.hpp"
#include "xartrek/kvtext.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace xartrek {

bool ConfigImage::contains(std::string_view kernel_id) const noexcept {
    return std::any_of(kernels.begin(), kernels.end(),
                       [&](const KernelResource& k) { return k.kernel_id == kernel_id; });
}

namespace {

void check_kernels(const std::vector<KernelResource>& kernels) {
    std::set<std::string> seen;
    for (const auto& k : kernels) {
        if (!(k.area > 0.0)) {
            throw InvalidArgument("kernel '" + k.kernel_id + "' must have area > 0");
        }
        if (!seen.insert(k.kernel_id).second) {
            throw InvalidArgument("duplicate kernel_id '" + k.kernel_id + "'");
        }
    }
}

} // namespace

PackingPlan pack_auto(std::vector<KernelResource> kernels, double capacity) {
    if (!(capacity > 0.0)) {
        throw InvalidArgument("FPGA capacity must be > 0");
    }
    check_kernels(kernels);
    for (const auto& k : kernels) {
        if (k.area > capacity) {
            throw OversizedKernelError(k.kernel_id);
        }
    }
    std::sort(kernels.begin(), kernels.end(), [](const auto& a, const auto& b) {
        if (a.area != b.area) {
            return a.area > b.area;
        }
        return a.kernel_id < b.kernel_id;
    });

    PackingPlan plan;
    for (auto& k : kernels) {
        auto fits = std::find_if(plan.begin(), plan.end(), [&](const ConfigImage& img) {
            return img.total_area + k.area <= capacity;
        });
        if (fits == plan.end()) {
            plan.push_back(ConfigImage{"xclbin-" + std::to_string(plan.size()), {}, 0.0});
            fits = std::prev(plan.end());
        }
        fits->total_area += k.area;
        fits->kernels.push_back(std::move(k));
    }
    return plan;
}

PackingPlan pack_manual(const std::map<std::string, std::string>& assignments,
                        const std::vector<KernelResource>& kernels, double capacity) {
    check_kernels(kernels);
    for (const auto& [kernel_id, image_id] : assignments) {
        bool known = std::any_of(kernels.begin(), kernels.end(),
                                 [&](const KernelResource& k) { return k.kernel_id == kernel_id; });
        if (!known) {
            throw AssignmentError("assignment names unknown kernel '" + kernel_id + "'");
        }
        if (image_id.empty()) {
            throw AssignmentError("kernel '" + kernel_id + "' assigned to an empty image id");
        }
    }
    PackingPlan plan;
    for (const auto& k : kernels) {
        auto it = assignments.find(k.kernel_id);
        if (it == assignments.end()) {
            throw AssignmentError("kernel '" + k.kernel_id + "' is not assigned to any image");
        }
        auto img = std::find_if(plan.begin(), plan.end(),
                                [&](const ConfigImage& c) { return c.image_id == it->second; });
        if (img == plan.end()) {
            plan.push_back(ConfigImage{it->second, {}, 0.0});
            img = std::prev(plan.end());
        }
        img->kernels.push_back(k);
        img->total_area += k.area;
    }
    for (const auto& img : plan) {
        if (img.total_area > capacity) {
            throw OverCapacityError(img.image_id);
        }
    }
    return plan;
}

std::vector<KernelResource> kernels_of(const std::vector<FunctionProfile>& profiles) {
    std::vector<KernelResource> out;
    for (const auto& p : profiles) {
        if (!p.kernel) {
            continue;
        }
        auto same = std::find_if(out.begin(), out.end(), [&](const KernelResource& k) {
            return k.kernel_id == p.kernel->kernel_id;
        });
        if (same == out.end()) {
            out.push_back(*p.kernel);
        } else if (same->area != p.kernel->area) {
            throw InvalidArgument("kernel '" + same->kernel_id +
                                  "' declared with two different areas");
        }
    }
    return out;
}

PlanSummary plan_summary(const PackingPlan& plan, double capacity) {
    PlanSummary s;
    s.capacity = capacity;
    for (const auto& img : plan) {
        s.images.push_back(ImageUtilization{img.image_id, img.kernels.size(), img.total_area,
                                            capacity > 0.0 ? img.total_area / capacity : 0.0});
    }
    return s;
}

void print_summary(std::ostream& out, const PlanSummary& summary) {
    out << summary.image_count() << " configuration image(s), capacity "
        << kv::format_number(summary.capacity) << '\n';
    for (const auto& i : summary.images) {
        std::ostringstream pct;
        pct << std::fixed << std::setprecision(1) << i.utilization * 100.0;
        out << "  " << i.image_id << ": " << i.kernel_count << " kernel(s), "
            << kv::format_number(i.used_area) << " area, " << pct.str() << "% used\n";
    }
}

void write_summary_csv(std::ostream& out, const PlanSummary& summary) {
    out << "image_id,kernel_count,used_area,utilization\n";
    for (const auto& i : summary.images) {
        out << i.image_id << ',' << i.kernel_count << ',' << kv::format_number(i.used_area) << ','
            << kv::format_number(i.utilization) << '\n';
    }
}

void write_plan_csv(std::ostream& out, const PackingPlan& plan) {
    out << "image_id,kernel_id,area\n";
    for (const auto& img : plan) {
        for (const auto& k : img.kernels) {
            out << img.image_id << ',' << k.kernel_id << ',' << kv::format_number(k.area) << '\n';
        }
    }
}

void write_plan_text(std::ostream& out, const PackingPlan& plan) {
    for (const auto& img : plan) {
        out << "[image]\nimage_id = " << img.image_id << '\n';
        for (const auto& k : img.kernels) {
            out << "kernel = " << k.kernel_id << ' ' << kv::format_number(k.area);
            if (!k.function_id.empty()) {
                out << ' ' << k.function_id;
            }
            out << '\n';
        }
        out << '\n';
    }
}

PackingPlan read_plan_text(std::istream& in) {
    PackingPlan plan;
    std::set<std::string> kernel_ids;
    for (const auto& r : kv::parse(in)) {
        if (r.section() != "image") {
            throw ParseError("unexpected section [" + r.section() + "] in plan file", r.line());
        }
        r.expect_keys({"image_id", "kernel"});
        ConfigImage img{r.str("image_id"), {}, 0.0};
        for (const auto* e : r.find_all("kernel")) {
            std::istringstream fields(e->value);
            KernelResource k;
            std::string area;
            if (!(fields >> k.kernel_id >> area)) {
                throw ParseError("expected 'kernel = <id> <area> [function]'", e->line);
            }
            k.area = kv::to_number(area, e->line);
            fields >> k.function_id;
            if (!(k.area > 0.0)) {
                throw ParseError("kernel area must be > 0", e->line);
            }
            if (!kernel_ids.insert(k.kernel_id).second) {
                throw ParseError("kernel '" + k.kernel_id + "' appears in two images", e->line);
            }
            img.total_area += k.area;
            img.kernels.push_back(std::move(k));
        }
        plan.push_back(std::move(img));
    }
    return plan;
}

PackingPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open plan file '" + path + "'");
    }
    return read_plan_text(in);
}

const ConfigImage* image_for_kernel(const PackingPlan& plan, std::string_view kernel_id) noexcept {
    for (const auto& img : plan) {
        if (img.contains(kernel_id)) {
            return &img;
        }
    }
    return nullptr;
}

} // namespace xartrek
