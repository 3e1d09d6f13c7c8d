#include "xartrek/builtin.hpp"

namespace xartrek::builtin {

namespace {

FunctionProfile make(std::string app, std::string fn, double x86, std::optional<double> arm,
                     double fpga, std::string kernel, double area, std::int64_t calls = 1) {
    FunctionProfile p;
    p.app_id = std::move(app);
    p.function_id = std::move(fn);
    p.x86_exec_isolated = Millis{x86};
    if (arm) {
        p.arm_exec_total = Millis{*arm};
    }
    p.fpga_exec_total = Millis{fpga};
    p.kernel = KernelResource{std::move(kernel), area, p.function_id};
    p.calls_per_run = calls;
    return p;
}

} // namespace

PlatformSpec platform() { return PlatformSpec{}; }

std::vector<FunctionProfile> benchmark_profiles() {
    return {
        make("CG_A", "conj_grad", 2182, 8406, 10597, "KNL_HW_CG_A", 24),
        make("FaceDet320", "face_detect_320", 175, 642, 332, "KNL_HW_FD320", 16),
        make("FaceDet640", "face_detect_640", 885, 2991, 832, "KNL_HW_FD640", 20),
        make("Digit500", "digit_rec_500", 883, 2281, 470, "KNL_HW_DR500", 14),
        // Kernel name as it appears in the hardware threshold table.
        make("Digit2000", "digit_rec_2000", 3521, 8963, 1229, "KNL_HW_DR200", 18),
    };
}

FunctionProfile facedet_multi_profile() {
    return make("FaceDet320_multi", "face_detect_320", 175, 642, 332, "KNL_HW_FD320", 16, 1000);
}

std::vector<FunctionProfile> all_profiles() {
    auto out = benchmark_profiles();
    out.push_back(facedet_multi_profile());
    return out;
}

std::vector<FunctionProfile> bfs_profiles() {
    return {
        make("BFS1000", "bfs", 3.36, std::nullopt, 726.50, "KNL_HW_BFS1000", 30),
        make("BFS2000", "bfs", 115.74, std::nullopt, 2282.54, "KNL_HW_BFS2000", 30),
        make("BFS3000", "bfs", 256.94, std::nullopt, 4981.05, "KNL_HW_BFS3000", 30),
        make("BFS4000", "bfs", 458.04, std::nullopt, 8760.80, "KNL_HW_BFS4000", 30),
        make("BFS5000", "bfs", 721.48, std::nullopt, 13524.76, "KNL_HW_BFS5000", 30),
    };
}

ThresholdTable hardware_thresholds() {
    ThresholdTable t;
    auto add = [&](std::string app, std::string kernel, Load fpga, Load arm) {
        ThresholdEntry e;
        e.app_id = app;
        e.kernel_id = std::move(kernel);
        e.fpga_thr = fpga;
        e.arm_thr = arm;
        t.emplace(std::move(app), std::move(e));
    };
    add("CG_A", "KNL_HW_CG_A", 31, 25);
    add("FaceDet320", "KNL_HW_FD320", 16, 31);
    add("FaceDet640", "KNL_HW_FD640", 0, 23);
    add("Digit500", "KNL_HW_DR500", 0, 18);
    add("Digit2000", "KNL_HW_DR200", 0, 17);
    return t;
}

} // namespace xartrek::builtin
