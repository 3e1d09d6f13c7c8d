#include "xartrek/threshold.hpp"

#include "xartrek/error.hpp"
#include "xartrek/kvtext.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace xartrek {

CostModel processor_sharing_model() {
    return [](const FunctionProfile& p, TargetKind t, const SystemState& s,
              const PlatformSpec& spec) { return exec_time(p, t, s, spec); };
}

namespace {

Millis x86_at(const FunctionProfile& profile, const PlatformSpec& spec, const CostModel& cost,
              Load n) {
    SystemState state;
    state.runnable_x86_processes = n;
    return cost(profile, TargetKind::X86, state, spec);
}

// Largest n in [0, max_load] with x86_at(n) <= budget, by galloping then
// bisection over the monotone cost curve.
Load crossing_load(const FunctionProfile& profile, const PlatformSpec& spec, const CostModel& cost,
                   Millis budget, Load max_load) {
    if (x86_at(profile, spec, cost, 0) > budget) {
        return 0;
    }
    Load good = 0;
    Load probe = 1;
    while (probe <= max_load && x86_at(profile, spec, cost, probe) <= budget) {
        good = probe;
        probe *= 2;
    }
    if (probe > max_load) {
        if (x86_at(profile, spec, cost, max_load) <= budget) {
            return max_load;
        }
        probe = max_load;
    }
    // invariant: x86_at(good) <= budget < x86_at(probe)
    while (probe - good > 1) {
        Load mid = good + (probe - good) / 2;
        if (x86_at(profile, spec, cost, mid) <= budget) {
            good = mid;
        } else {
            probe = mid;
        }
    }
    return good;
}

} // namespace

ThresholdEntry estimate_thresholds(const FunctionProfile& profile, const PlatformSpec& spec,
                                   const CostModel& cost_model, Load max_load) {
    if (max_load < 1) {
        throw InvalidArgument("max_load must be >= 1");
    }
    profile.validate();
    const SystemState isolated;

    ThresholdEntry e;
    e.app_id = profile.app_id;
    e.kernel_id = profile.kernel ? profile.kernel->kernel_id : std::string{};
    if (profile.kernel) {
        e.fpga_thr = crossing_load(profile, spec, cost_model,
                                   cost_model(profile, TargetKind::FPGA, isolated, spec), max_load);
    } else {
        e.fpga_thr = max_load;
    }
    if (profile.arm_exec_total && spec.arm_cores > 0) {
        e.arm_thr = crossing_load(profile, spec, cost_model,
                                  cost_model(profile, TargetKind::ARM, isolated, spec), max_load);
    } else {
        e.arm_thr = max_load;
    }
    seed_last_exec(e, profile);
    return e;
}

ThresholdTable estimate_table(const std::vector<FunctionProfile>& profiles,
                              const PlatformSpec& spec, const CostModel& cost_model,
                              Load max_load) {
    ThresholdTable table;
    for (const auto& p : profiles) {
        table[p.app_id] = estimate_thresholds(p, spec, cost_model, max_load);
    }
    return table;
}

ThresholdEntry update_on_completion(const ThresholdEntry& entry, const ExecutionRecord& rec) {
    if (rec.app_id != entry.app_id) {
        throw MismatchedAppError("execution record for '" + rec.app_id +
                                 "' applied to threshold entry of '" + entry.app_id + "'");
    }
    if (!(rec.exec_time.count() > 0.0) || rec.load_at_start < 0) {
        throw InvalidArgument("execution record needs exec_time > 0 and load >= 0");
    }
    ThresholdEntry next = entry;
    switch (rec.target) {
    case TargetKind::X86:
        if (rec.exec_time > entry.last_fpga_exec && rec.load_at_start < entry.fpga_thr) {
            next.fpga_thr = rec.load_at_start;
        } else if (rec.exec_time > entry.last_arm_exec && rec.load_at_start < entry.arm_thr) {
            next.arm_thr = rec.load_at_start;
        }
        next.last_x86_exec = rec.exec_time;
        break;
    case TargetKind::ARM:
        next.last_arm_exec = rec.exec_time;
        if (rec.exec_time > entry.last_x86_exec) {
            next.arm_thr = increase_threshold(entry.arm_thr);
        }
        break;
    case TargetKind::FPGA:
        next.last_fpga_exec = rec.exec_time;
        if (rec.exec_time > entry.last_x86_exec) {
            next.fpga_thr = increase_threshold(entry.fpga_thr);
        }
        break;
    }
    return next;
}

void seed_last_exec(ThresholdEntry& entry, const FunctionProfile& profile) {
    if (entry.last_x86_exec.count() == 0.0) {
        entry.last_x86_exec = profile.x86_exec_isolated;
    }
    if (entry.last_arm_exec.count() == 0.0 && profile.arm_exec_total) {
        entry.last_arm_exec = *profile.arm_exec_total;
    }
    if (entry.last_fpga_exec.count() == 0.0) {
        entry.last_fpga_exec = profile.fpga_exec_total;
    }
}

namespace {

constexpr const char* kBaseHeader = "app_id,kernel_id,fpga_thr,arm_thr";
constexpr const char* kFullHeader =
    "app_id,kernel_id,fpga_thr,arm_thr,last_x86_exec,last_arm_exec,last_fpga_exec";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

Load parse_threshold(const std::string& text, std::size_t line) {
    auto v = kv::to_integer(text, line);
    if (v < 0) {
        throw ParseError("threshold must be >= 0, got " + text, line);
    }
    return v;
}

Millis parse_duration(const std::string& text, std::size_t line) {
    auto v = kv::to_number(text, line);
    if (v < 0.0) {
        throw ParseError("duration must be >= 0, got " + text, line);
    }
    return Millis{v};
}

} // namespace

ThresholdTable read_table(std::istream& in) {
    ThresholdTable table;
    std::string line;
    std::size_t line_no = 0;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (columns == 0) {
            if (line == kBaseHeader) {
                columns = 4;
            } else if (line == kFullHeader) {
                columns = 7;
            } else {
                throw ParseError("expected header '" + std::string(kFullHeader) + "'", line_no);
            }
            continue;
        }
        auto cells = split_csv(line);
        if (cells.size() != columns) {
            throw ParseError("expected " + std::to_string(columns) + " columns, got " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        ThresholdEntry e;
        e.app_id = cells[0];
        e.kernel_id = cells[1];
        if (e.app_id.empty()) {
            throw ParseError("empty app_id", line_no);
        }
        e.fpga_thr = parse_threshold(cells[2], line_no);
        e.arm_thr = parse_threshold(cells[3], line_no);
        if (columns == 7) {
            e.last_x86_exec = parse_duration(cells[4], line_no);
            e.last_arm_exec = parse_duration(cells[5], line_no);
            e.last_fpga_exec = parse_duration(cells[6], line_no);
        }
        if (!table.emplace(e.app_id, e).second) {
            throw ParseError("duplicate app_id '" + e.app_id + "'", line_no);
        }
    }
    return table;
}

ThresholdTable table_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open threshold table '" + path + "'");
    }
    return read_table(in);
}

void write_table(std::ostream& out, const ThresholdTable& table) {
    out << kFullHeader << '\n';
    for (const auto& [app, e] : table) {
        out << e.app_id << ',' << e.kernel_id << ',' << e.fpga_thr << ',' << e.arm_thr << ','
            << kv::format_number(e.last_x86_exec.count()) << ','
            << kv::format_number(e.last_arm_exec.count()) << ','
            << kv::format_number(e.last_fpga_exec.count()) << '\n';
    }
}

void table_store(const ThresholdTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open threshold table '" + path + "' for writing");
    }
    write_table(out, table);
    if (!out) {
        throw IoError("failed writing threshold table '" + path + "'");
    }
}

} // namespace xartrek
