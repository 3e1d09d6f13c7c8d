#include "xartrek/platform.hpp"

#include "xartrek/error.hpp"
#include "xartrek/kvtext.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>

namespace xartrek {

std::optional<TargetKind> target_from_flag(std::uint8_t flag) noexcept {
    switch (flag) {
    case 0: return TargetKind::X86;
    case 1: return TargetKind::ARM;
    case 2: return TargetKind::FPGA;
    default: return std::nullopt;
    }
}

std::string_view to_string(TargetKind t) noexcept {
    switch (t) {
    case TargetKind::X86: return "x86";
    case TargetKind::ARM: return "arm";
    case TargetKind::FPGA: return "fpga";
    }
    return "?";
}

std::optional<TargetKind> parse_target(std::string_view text) noexcept {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "x86" || lower == "0") return TargetKind::X86;
    if (lower == "arm" || lower == "1") return TargetKind::ARM;
    if (lower == "fpga" || lower == "2") return TargetKind::FPGA;
    return std::nullopt;
}

std::string_view to_string(LoadClass c) noexcept {
    switch (c) {
    case LoadClass::Low: return "low";
    case LoadClass::Medium: return "medium";
    case LoadClass::High: return "high";
    }
    return "?";
}

void PlatformSpec::validate() const {
    if (x86_cores < 1) {
        throw InvalidArgument("platform needs at least one x86 core");
    }
    if (arm_cores < 0) {
        throw InvalidArgument("arm_cores must be >= 0");
    }
    if (fpga_area_capacity < 0.0) {
        throw InvalidArgument("fpga_area_capacity must be >= 0");
    }
    for (Millis d : {reconfig_latency, ethernet_migration_overhead, pcie_transfer_overhead,
                     load_sampler_period}) {
        if (d.count() < 0.0) {
            throw InvalidArgument("platform durations must be >= 0");
        }
    }
}

void FunctionProfile::validate() const {
    if (app_id.empty()) {
        throw InvalidArgument("profile without app_id");
    }
    auto positive = [&](Millis d, const char* what) {
        if (!(d.count() > 0.0)) {
            throw InvalidArgument("profile '" + app_id + "': " + what + " must be > 0");
        }
    };
    positive(x86_exec_isolated, "x86 time");
    positive(fpga_exec_total, "FPGA time");
    if (arm_exec_total) {
        positive(*arm_exec_total, "ARM time");
    }
    if (kernel && !(kernel->area > 0.0)) {
        throw InvalidArgument("profile '" + app_id + "': kernel area must be > 0");
    }
    if (kernel && kernel->kernel_id.empty()) {
        throw InvalidArgument("profile '" + app_id + "': kernel without id");
    }
    if (calls_per_run < 1) {
        throw InvalidArgument("profile '" + app_id + "': calls_per_run must be >= 1");
    }
}

Millis exec_time(const FunctionProfile& profile, TargetKind target, const SystemState& state,
                 const PlatformSpec& spec) {
    auto share = [](std::int64_t runnable, std::int64_t cores) {
        return std::max(1.0, static_cast<double>(runnable) / static_cast<double>(cores));
    };
    switch (target) {
    case TargetKind::X86:
        return profile.x86_exec_isolated * share(state.runnable_x86_processes, spec.x86_cores);
    case TargetKind::ARM:
        if (!profile.arm_exec_total) {
            throw InvalidArgument("profile '" + profile.app_id + "' has no ARM measurement");
        }
        if (spec.arm_cores < 1) {
            throw InvalidArgument("platform has no ARM cores");
        }
        return *profile.arm_exec_total * share(state.runnable_arm_processes, spec.arm_cores) +
               spec.ethernet_migration_overhead;
    case TargetKind::FPGA:
        if (!profile.kernel) {
            throw NoKernelError("profile '" + profile.app_id + "' has no hardware kernel");
        }
        return profile.fpga_exec_total + spec.pcie_transfer_overhead;
    }
    throw InvalidArgument("unknown target");
}

LoadClass classify_load(std::int64_t n_processes, const PlatformSpec& spec) {
    if (n_processes < spec.x86_cores) {
        return LoadClass::Low;
    }
    if (n_processes <= spec.x86_cores + spec.arm_cores) {
        return LoadClass::Medium;
    }
    return LoadClass::High;
}

namespace {

FunctionProfile profile_from(const kv::Record& r) {
    r.expect_keys({"app_id", "function_id", "x86_ms", "arm_ms", "fpga_ms", "kernel_id",
                   "kernel_area", "calls_per_run"});
    FunctionProfile p;
    p.app_id = r.str("app_id");
    p.function_id = r.str_or("function_id", p.app_id);
    p.x86_exec_isolated = Millis{r.number("x86_ms")};
    if (auto arm = r.number_opt("arm_ms")) {
        p.arm_exec_total = Millis{*arm};
    }
    p.fpga_exec_total = Millis{r.number("fpga_ms")};
    if (r.has("kernel_id")) {
        p.kernel = KernelResource{r.str("kernel_id"), r.number("kernel_area"), p.function_id};
    } else if (r.has("kernel_area")) {
        throw ParseError("kernel_area given without kernel_id", r.line());
    }
    p.calls_per_run = r.integer_opt("calls_per_run").value_or(1);
    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), r.line());
    }
    return p;
}

} // namespace

std::vector<FunctionProfile> read_profiles(std::istream& in) {
    std::vector<FunctionProfile> out;
    for (const auto& r : kv::parse(in)) {
        if (r.section() != "function") {
            throw ParseError("unexpected section [" + r.section() + "] in profile file", r.line());
        }
        auto p = profile_from(r);
        if (find_profile(out, p.app_id) != nullptr) {
            throw ParseError("duplicate app_id '" + p.app_id + "'", r.line());
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<FunctionProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open profile file '" + path + "'");
    }
    return read_profiles(in);
}

void write_profiles(std::ostream& out, const std::vector<FunctionProfile>& profiles) {
    for (const auto& p : profiles) {
        out << "[function]\n"
            << "app_id = " << p.app_id << '\n'
            << "function_id = " << p.function_id << '\n'
            << "x86_ms = " << kv::format_number(p.x86_exec_isolated.count()) << '\n';
        if (p.arm_exec_total) {
            out << "arm_ms = " << kv::format_number(p.arm_exec_total->count()) << '\n';
        }
        out << "fpga_ms = " << kv::format_number(p.fpga_exec_total.count()) << '\n';
        if (p.kernel) {
            out << "kernel_id = " << p.kernel->kernel_id << '\n'
                << "kernel_area = " << kv::format_number(p.kernel->area) << '\n';
        }
        out << "calls_per_run = " << p.calls_per_run << "\n\n";
    }
}

PlatformSpec read_platform(std::istream& in) {
    auto records = kv::parse(in);
    if (records.size() != 1 || records.front().section() != "platform") {
        throw ParseError("platform file must hold exactly one [platform] section",
                         records.empty() ? 0 : records.front().line());
    }
    const auto& r = records.front();
    r.expect_keys({"x86_cores", "arm_cores", "fpga_area_capacity", "reconfig_latency_ms",
                   "ethernet_migration_overhead_ms", "pcie_transfer_overhead_ms",
                   "load_sampler_period_ms"});
    PlatformSpec spec;
    spec.x86_cores = r.integer_opt("x86_cores").value_or(spec.x86_cores);
    spec.arm_cores = r.integer_opt("arm_cores").value_or(spec.arm_cores);
    spec.fpga_area_capacity = r.number_opt("fpga_area_capacity").value_or(spec.fpga_area_capacity);
    auto ms = [&](std::string_view key, Millis fallback) {
        auto v = r.number_opt(key);
        return v ? Millis{*v} : fallback;
    };
    spec.reconfig_latency = ms("reconfig_latency_ms", spec.reconfig_latency);
    spec.ethernet_migration_overhead =
        ms("ethernet_migration_overhead_ms", spec.ethernet_migration_overhead);
    spec.pcie_transfer_overhead = ms("pcie_transfer_overhead_ms", spec.pcie_transfer_overhead);
    spec.load_sampler_period = ms("load_sampler_period_ms", spec.load_sampler_period);
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), r.line());
    }
    return spec;
}

PlatformSpec load_platform(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open platform file '" + path + "'");
    }
    return read_platform(in);
}

void write_platform(std::ostream& out, const PlatformSpec& spec) {
    out << "[platform]\n"
        << "x86_cores = " << spec.x86_cores << '\n'
        << "arm_cores = " << spec.arm_cores << '\n'
        << "fpga_area_capacity = " << kv::format_number(spec.fpga_area_capacity) << '\n'
        << "reconfig_latency_ms = " << kv::format_number(spec.reconfig_latency.count()) << '\n'
        << "ethernet_migration_overhead_ms = "
        << kv::format_number(spec.ethernet_migration_overhead.count()) << '\n'
        << "pcie_transfer_overhead_ms = " << kv::format_number(spec.pcie_transfer_overhead.count())
        << '\n'
        << "load_sampler_period_ms = " << kv::format_number(spec.load_sampler_period.count())
        << '\n';
}

const FunctionProfile* find_profile(const std::vector<FunctionProfile>& profiles,
                                    std::string_view app_id) noexcept {
    for (const auto& p : profiles) {
        if (p.app_id == app_id) {
            return &p;
        }
    }
    return nullptr;
}

} // namespace xartrek
