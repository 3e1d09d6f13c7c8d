// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "xartrek/builtin.hpp"
#include "xartrek/error.hpp"
#include "xartrek/packer.hpp"
#include "xartrek/protocol.hpp"
#include "xartrek/runtime.hpp"
#include "xartrek/scheduler.hpp"
#include "xartrek/sim.hpp"
#include "xartrek/threshold.hpp"

#include "../oracles.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

using namespace xartrek;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

int failures = 0;

void criterion(int n, const char* name, double limit_s, const std::function<Outcome()>& body) {
    auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs > limit_s) {
        o.ok = false;
        o.detail += " (took " + std::to_string(secs) + " s, limit " + std::to_string(limit_s) + " s)";
    }
    std::ostringstream line;
    line << (o.ok ? "PASS" : "FAIL") << " criterion " << n << ": " << name << " [" << std::fixed;
    line.precision(3);
    line << secs << " s]";
    if (!o.detail.empty()) {
        line << " - " << o.detail;
    }
    std::cout << line.str() << std::endl;
    failures += o.ok ? 0 : 1;
}

std::string run_capture(const std::string& cmd, int& code) {
    std::string out;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (p == nullptr) {
        code = -1;
        return out;
    }
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) {
        out.append(buf.data(), n);
    }
    int status = ::pclose(p);
    code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

sim::SimScenario base_scenario(sim::Policy policy) {
    sim::SimScenario sc;
    sc.platform = builtin::platform();
    sc.profiles = builtin::all_profiles();
    sc.policy = policy;
    return sc;
}

// 1 -----------------------------------------------------------------------
Outcome decision_oracle() {
    auto plan = pack_auto(kernels_of(builtin::benchmark_profiles()), 100);
    auto empty = FpgaState::with_plan(plan);
    std::size_t cases = 0;
    std::size_t agree = 0;
    for (const auto& [app, e] : builtin::hardware_thresholds()) {
        for (Load load = 0; load <= 200; ++load) {
            for (bool k : {true, false}) {
                ++cases;
                auto want = oracle::algorithm2(load, e.fpga_thr, e.arm_thr, k);
                const auto* img = image_for_kernel(plan, e.kernel_id);
                // K false: an image that lacks the kernel is loaded, or none at all.
                auto other = std::find_if(plan.begin(), plan.end(), [&](const ConfigImage& c) {
                    return !c.contains(e.kernel_id);
                });
                auto state = k ? FpgaState::with_plan(plan, img->image_id)
                               : (other != plan.end() ? FpgaState::with_plan(plan, other->image_id)
                                                      : empty);
                auto got = decide(load, e, state);
                bool same = got.flag() == want.flag && got.reconfigure.has_value() == want.reconfigure;
                if (same && got.reconfigure) {
                    same = *got.reconfigure == img->image_id;
                }
                agree += same ? 1 : 0;
            }
        }
    }
    return {cases == 2010 && agree == cases,
            std::to_string(agree) + "/" + std::to_string(cases) + " cases agree"};
}

// 2 -----------------------------------------------------------------------
Outcome threshold_zero() {
    auto out_path = fs::temp_directory_path() / ("xartrek_acc_table_" + std::to_string(::getpid()));
    int code = 0;
    run_capture(std::string(XARTREK_CLI) + " calibrate --profiles " XARTREK_DATA
                "/table1.profiles --out " + out_path.string() + " 2>&1",
                code);
    if (code != 0) {
        return {false, "calibrate exited with " + std::to_string(code)};
    }
    auto table = table_load(out_path.string());
    fs::remove(out_path);
    auto profiles = builtin::benchmark_profiles();
    auto spec = builtin::platform();
    bool ok = table.size() == 5;
    std::ostringstream d;
    for (const auto& p : profiles) {
        const auto& e = table.at(p.app_id);
        auto want_f = oracle::linear_scan(p.x86_exec_isolated.count(), p.fpga_exec_total.count(),
                                          spec.x86_cores, 200);
        auto want_a = oracle::linear_scan(p.x86_exec_isolated.count(), p.arm_exec_total->count(),
                                          spec.x86_cores, 200);
        ok = ok && e.fpga_thr == want_f && e.arm_thr == want_a;
        bool hw_zero = builtin::hardware_thresholds().at(p.app_id).fpga_thr == 0;
        ok = ok && (e.fpga_thr == 0) == hw_zero;
        d << p.app_id << "=" << e.fpga_thr << "/" << e.arm_thr << " ";
    }
    ok = ok && table.at("CG_A").fpga_thr == 29 && table.at("CG_A").arm_thr == 23 &&
         table.at("FaceDet320").fpga_thr == 11 && table.at("FaceDet320").arm_thr == 22;
    return {ok, d.str()};
}

// 3 -----------------------------------------------------------------------
Outcome algorithm1_invariants() {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> t(0.1, 30000.0);
    std::uniform_int_distribution<Load> load(0, 250);
    std::uniform_int_distribution<int> target(0, 2);
    std::size_t violations = 0;
    std::size_t records = 0;
    for (const auto& [app, start] : builtin::hardware_thresholds()) {
        ThresholdEntry e = start;
        seed_last_exec(e, *find_profile(builtin::benchmark_profiles(), app));
        for (int i = 0; i < 10000; ++i) {
            ExecutionRecord r{app, static_cast<TargetKind>(target(rng)), Millis{t(rng)}, load(rng)};
            auto u = update_on_completion(e, r);
            ++records;
            bool ok = u.fpga_thr >= 0 && u.arm_thr >= 0;
            if (r.target == TargetKind::X86) {
                ok = ok && u.fpga_thr <= e.fpga_thr && u.arm_thr <= e.arm_thr;
                ok = ok && (u.fpga_thr == e.fpga_thr || u.fpga_thr == r.load_at_start);
                ok = ok && (u.arm_thr == e.arm_thr || u.arm_thr == r.load_at_start);
            } else if (r.target == TargetKind::ARM) {
                ok = ok && u.arm_thr >= e.arm_thr && u.fpga_thr == e.fpga_thr;
            } else {
                ok = ok && u.fpga_thr >= e.fpga_thr && u.arm_thr == e.arm_thr;
            }
            violations += ok ? 0 : 1;
            e = u;
        }
    }
    return {violations == 0, std::to_string(records) + " records, " +
                                 std::to_string(violations) + " violations"};
}

// 4 -----------------------------------------------------------------------
Outcome fig3_low_load() {
    auto profiles = builtin::benchmark_profiles();
    std::size_t with_cg = 0;
    std::size_t cg_ok = 0;
    std::size_t quiet = 0;
    std::size_t quiet_ok = 0;
    for (std::int64_t n = 1; n <= 5; ++n) {
        auto sc = base_scenario(sim::Policy::XarTrek);
        sc.profiles = profiles;
        sc.thresholds = builtin::hardware_thresholds();
        sc.workload = sim::RandomSet{n, true, {}};
        sc.seed = 1;
        auto run_all = [&](sim::Policy p) {
            auto s = sc;
            s.policy = p;
            return sim::run_repeated(s, 10);
        };
        auto xt = run_all(sim::Policy::XarTrek);
        auto x86 = run_all(sim::Policy::AlwaysX86);
        auto fpga = run_all(sim::Policy::AlwaysFPGA);
        for (std::size_t i = 0; i < xt.runs.size(); ++i) {
            const auto& apps = xt.runs[i].apps;
            bool has_cg = std::any_of(apps.begin(), apps.end(),
                                      [](const sim::AppResult& a) { return a.app_id == "CG_A"; });
            // Migration is warranted when some app runs faster elsewhere in isolation.
            bool warranted = std::any_of(apps.begin(), apps.end(), [&](const sim::AppResult& a) {
                const auto* p = find_profile(profiles, a.app_id);
                return std::min(p->fpga_exec_total, *p->arm_exec_total) < p->x86_exec_isolated;
            });
            double m_xt = xt.runs[i].mean_completion.count();
            if (has_cg) {
                ++with_cg;
                cg_ok += m_xt <= fpga.runs[i].mean_completion.count() ? 1 : 0;
            }
            if (!warranted) {
                ++quiet;
                double ref = x86.runs[i].mean_completion.count();
                quiet_ok += std::abs(m_xt - ref) <= 0.05 * ref ? 1 : 0;
            }
        }
    }
    std::ostringstream d;
    d << "CG_A sets: " << cg_ok << "/" << with_cg << " XarTrek <= AlwaysFPGA; "
      << "no-migration sets: " << quiet_ok << "/" << quiet << " within 5% of AlwaysX86";
    return {with_cg > 0 && quiet > 0 && cg_ok == with_cg && quiet_ok == quiet, d.str()};
}

// 5 -----------------------------------------------------------------------
Outcome fig6_throughput() {
    auto sc = base_scenario(sim::Policy::XarTrek);
    sc.workload = sim::Throughput{"FaceDet320_multi", 1000, Millis{60000}, 1};
    sc.background.processes = 50;
    auto rate = [&](sim::Policy p, sim::FpgaBaselineConfig cfg) {
        auto s = sc;
        s.policy = p;
        s.fpga_baseline = cfg;
        return sim::run(s).throughput;
    };
    double xt = rate(sim::Policy::XarTrek, sim::FpgaBaselineConfig::Preloaded);
    double x86 = rate(sim::Policy::AlwaysX86, sim::FpgaBaselineConfig::Preloaded);
    double fpga = rate(sim::Policy::AlwaysFPGA, sim::FpgaBaselineConfig::PerCall);
    std::ostringstream d;
    d.precision(4);
    d << "XarTrek " << xt << "/s, AlwaysX86 " << x86 << "/s (x" << xt / x86
      << "), AlwaysFPGA per-call " << fpga << "/s";
    return {xt >= 2.0 * x86 && xt >= fpga, d.str()};
}

// 6 -----------------------------------------------------------------------
Outcome fig9_mix() {
    const std::vector<double> fractions{0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
    bool ok = true;
    std::ostringstream d;
    d.precision(6);
    for (double f : fractions) {
        auto sc = base_scenario(sim::Policy::XarTrek);
        sc.profiles = builtin::benchmark_profiles();
        sc.thresholds = builtin::hardware_thresholds();
        sc.workload = sim::Mix{10, "CG_A", "Digit2000", f};
        sc.background.processes = 110;
        double xt = sim::run(sc).mean_completion.count();
        sc.policy = sim::Policy::AlwaysX86;
        double x86 = sim::run(sc).mean_completion.count();
        bool last = f == 1.0;
        bool point_ok = last ? x86 < xt : xt <= x86;
        ok = ok && point_ok;
        d << f * 100 << "%: XarTrek " << xt << " ms vs x86 " << x86 << " ms"
          << (point_ok ? "" : " (expected " + std::string(last ? "x86" : "XarTrek") + " to win)")
          << "; ";
    }
    return {ok, d.str()};
}

// 7 -----------------------------------------------------------------------
Outcome packing() {
    std::mt19937_64 rng(4242);
    std::size_t infeasible = 0;
    for (int i = 0; i < 1000; ++i) {
        double cap = 20.0 + static_cast<double>(rng() % 181);
        int n = 1 + static_cast<int>(rng() % 40);
        std::vector<KernelResource> ks;
        for (int k = 0; k < n; ++k) {
            double area = 1.0 + static_cast<double>(rng() % static_cast<std::uint64_t>(cap));
            ks.push_back({"k" + std::to_string(k), area, ""});
        }
        auto plan = pack_auto(ks, cap);
        std::size_t placed = 0;
        bool ok = true;
        for (const auto& img : plan) {
            double sum = 0.0;
            for (const auto& k : img.kernels) {
                sum += k.area;
            }
            placed += img.kernels.size();
            ok = ok && sum <= cap && sum == img.total_area;
        }
        infeasible += ok && placed == ks.size() ? 0 : 1;
    }

    std::mt19937_64 corpus(2021);
    std::size_t optimal = 0;
    std::vector<std::string> misses;
    for (int i = 0; i < 200; ++i) {
        int n = 1 + static_cast<int>(corpus() % 8);
        std::vector<KernelResource> ks;
        std::vector<double> areas;
        for (int k = 0; k < n; ++k) {
            double area = 1.0 + static_cast<double>(corpus() % 100);
            ks.push_back({"k" + std::to_string(k), area, ""});
            areas.push_back(area);
        }
        auto got = pack_auto(ks, 100).size();
        auto best = oracle::brute_force_bins(areas, 100);
        if (got == best) {
            ++optimal;
        } else {
            std::ostringstream m;
            m << "#" << i << " ffd " << got << " vs " << best;
            misses.push_back(m.str());
        }
    }
    std::ostringstream d;
    d << "fuzz infeasible " << infeasible << "/1000; corpus optimal " << optimal << "/200";
    for (const auto& m : misses) {
        d << "; " << m;
    }
    return {infeasible == 0 && optimal == 200, d.str()};
}

// 8 -----------------------------------------------------------------------
Outcome protocol() {
    using namespace wire;
    std::vector<Message> all{
        Request{"digit2000", "digit_rec"},
        Response{2},
        Completion{ExecutionRecord{"CG_A", TargetKind::FPGA, Millis{1229.5}, 50}},
        KernelQuery{},
        KernelList{{"KNL_HW_CG_A", "KNL_HW_DR200"}},
        Shutdown{},
        Ack{},
    };
    for (const auto& m : all) {
        if (!(decode(encode(m)) == m)) {
            return {false, "round trip failed for tag " + std::to_string(int(tag_of(m)))};
        }
    }
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20000; ++i) {
        auto frame = encode(all[rng() % all.size()]);
        frame[rng() % frame.size()] = static_cast<std::uint8_t>(rng());
        if (rng() % 3 == 0) {
            frame.resize(rng() % (frame.size() + 1));
        }
        try {
            (void)decode(frame);
        } catch (const ProtocolError&) {
        }
    }

    auto path = (fs::temp_directory_path() / ("xartrek_acc_" + std::to_string(::getpid()) + ".sock"))
                    .string();
    ServerConfig cfg;
    cfg.endpoint = Endpoint::parse("unix:" + path);
    cfg.platform = builtin::platform();
    cfg.table = builtin::hardware_thresholds();
    cfg.fpga = FpgaState::with_plan(pack_auto(kernels_of(builtin::benchmark_profiles()), 100),
                                    "xclbin-0");
    cfg.load_source = fixed_load(30);
    cfg.log = [](std::string_view) {};
    const auto initial = cfg.table;
    SchedulerServer server(std::move(cfg));
    server.start();

    const std::vector<std::string> apps{"CG_A", "FaceDet320", "FaceDet640", "Digit500",
                                        "Digit2000"};
    std::vector<ExecutionRecord> sent;
    std::mutex mu;
    std::size_t errors = 0;
    std::vector<std::thread> threads;
    for (int c = 0; c < 64; ++c) {
        threads.emplace_back([&, c] {
            std::mt19937_64 r(static_cast<std::uint64_t>(c) * 7 + 1);
            ClientOptions o;
            o.endpoint = Endpoint::parse("unix:" + path);
            o.timeout = std::chrono::milliseconds(5000);
            o.log = [](std::string_view) {};
            try {
                SchedulerSession s(o);
                for (int i = 0; i < 25; ++i) {
                    const auto& app = apps[r() % apps.size()];
                    (void)s.request(app, "f");
                    ExecutionRecord rec{app, static_cast<TargetKind>(r() % 3),
                                        Millis{1.0 + static_cast<double>(r() % 15000)},
                                        static_cast<Load>(r() % 150)};
                    s.report(rec);
                    std::lock_guard lk(mu);
                    sent.push_back(rec);
                }
            } catch (const std::exception&) {
                std::lock_guard lk(mu);
                ++errors;
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    auto applied = server.applied_completions();
    auto replay = initial;
    for (const auto& r : applied) {
        auto& e = replay.at(r.app_id);
        e = update_on_completion(e, r);
    }
    auto key = [](const ExecutionRecord& r) {
        return std::make_tuple(r.app_id, int(r.target), r.exec_time.count(), r.load_at_start);
    };
    auto a = applied;
    auto b = sent;
    std::sort(a.begin(), a.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
    std::sort(b.begin(), b.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
    bool same_events = a == b;
    bool same_table = replay == server.table_snapshot();
    server.stop();
    std::ostringstream d;
    d << "7 kinds round-trip, 20000 fuzzed frames, 64 clients x 25 completions: "
      << (same_events ? "events match" : "events differ") << ", "
      << (same_table ? "table equals serial replay" : "table differs from replay")
      << ", client errors " << errors;
    return {same_events && same_table && errors == 0, d.str()};
}

// 9 -----------------------------------------------------------------------
Outcome determinism() {
    auto dir = fs::temp_directory_path() / ("xartrek_acc_det_" + std::to_string(::getpid()));
    std::string outputs[2];
    for (int i = 0; i < 2; ++i) {
        auto out = dir / std::to_string(i);
        int code = 0;
        run_capture(std::string(XARTREK_CLI) + " run " XARTREK_EXPERIMENTS
                    "/paper.exp --seed 7 --out " + out.string() + " 2>&1",
                    code);
        if (code != 0) {
            return {false, "run exited with " + std::to_string(code)};
        }
        outputs[i] = slurp(out / "metrics.csv");
    }
    fs::remove_all(dir);
    bool ok = !outputs[0].empty() && outputs[0] == outputs[1];
    return {ok, std::to_string(outputs[0].size()) + " bytes, " +
                    (ok ? "identical" : "different")};
}

} // namespace

int main() {
    criterion(1, "decision oracle equivalence", 1.0, decision_oracle);
    criterion(2, "threshold-zero reproduction", 5.0, threshold_zero);
    criterion(3, "threshold update invariants", 5.0, algorithm1_invariants);
    criterion(4, "low-load random sets", 10.0, fig3_low_load);
    criterion(5, "throughput at 50 background processes", 10.0, fig6_throughput);
    criterion(6, "CG_A mix sweep at 120 processes", 10.0, fig9_mix);
    criterion(7, "kernel packing", 10.0, packing);
    criterion(8, "wire protocol and single-writer server", 30.0, protocol);
    criterion(9, "determinism of cmd_run", 30.0, determinism);
    return failures;
}
