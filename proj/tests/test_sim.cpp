#include "xartrek/builtin.hpp"
#include "xartrek/error.hpp"
#include "xartrek/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace xartrek;
using namespace xartrek::sim;

namespace {

SimScenario fixed(std::vector<std::string> apps, Policy policy) {
    SimScenario sc;
    sc.platform = builtin::platform();
    sc.profiles = builtin::all_profiles();
    sc.thresholds = builtin::hardware_thresholds();
    sc.workload = FixedSet{std::move(apps)};
    sc.policy = policy;
    return sc;
}

SimScenario throughput(Policy policy, std::int64_t background) {
    SimScenario sc;
    sc.platform = builtin::platform();
    sc.profiles = builtin::all_profiles();
    sc.workload = Throughput{"FaceDet320_multi", 1000, Millis{60000}, 1};
    sc.background.processes = background;
    sc.policy = policy;
    return sc;
}

std::string csv_of(const SimScenario& sc) {
    std::ostringstream out;
    write_metrics_header(out);
    auto m = run(sc);
    write_metrics_rows(out, sc.id, sc.policy, 0, m);
    return out.str();
}

} // namespace

TEST_CASE("single application examples") {
    auto m = run(fixed({"Digit2000"}, Policy::AlwaysX86));
    CHECK(m.mean_completion.count() == 3521.0);
    m = run(fixed({"Digit2000"}, Policy::AlwaysFPGA));
    CHECK(m.mean_completion.count() == 1229.0);
    CHECK(m.reconfigurations == 0);

    m = run(fixed({"FaceDet320"}, Policy::XarTrek));
    CHECK(m.mean_completion.count() == 175.0);
    CHECK(m.apps[0].target == TargetKind::X86);
    CHECK(m.migrations[0] == 1);

    m = run(fixed({"CG_A"}, Policy::AlwaysARM));
    CHECK(m.mean_completion.count() == 8406.0);
}

TEST_CASE("processor sharing slows co-runners") {
    std::vector<std::string> apps(12, "CG_A");
    auto m = run(fixed(apps, Policy::AlwaysX86));
    // 12 jobs on 6 cores: each at half speed, oracle 2182 * 12 / 6.
    CHECK(m.mean_completion.count() == doctest::Approx(2182.0 * 12 / 6));
    CHECK(m.makespan.count() == doctest::Approx(4364.0));

    // Two jobs on one core: both at rate 1/2 until the short one ends.
    auto sc = fixed({"FaceDet320", "CG_A"}, Policy::AlwaysX86);
    sc.platform.x86_cores = 1;
    m = run(sc);
    CHECK(m.apps[0].completion.count() == doctest::Approx(350.0));
    CHECK(m.apps[1].completion.count() == doctest::Approx(2182.0 + 175.0));
}

TEST_CASE("FPGA compute units are FIFO per kernel") {
    auto m = run(fixed({"Digit2000", "Digit2000", "Digit2000"}, Policy::AlwaysFPGA));
    CHECK(m.apps[0].completion.count() == 1229.0);
    CHECK(m.apps[1].completion.count() == 2458.0);
    CHECK(m.apps[2].completion.count() == 3687.0);
    // Different kernels run side by side.
    m = run(fixed({"Digit2000", "Digit500"}, Policy::AlwaysFPGA));
    CHECK(m.apps[0].completion.count() == 1229.0);
    CHECK(m.apps[1].completion.count() == 470.0);
}

TEST_CASE("FPGA programming latency") {
    auto sc = fixed({"Digit2000"}, Policy::AlwaysFPGA);
    sc.initial_image = "";
    auto m = run(sc);
    CHECK(m.mean_completion.count() == 1629.0);
    CHECK(m.reconfigurations == 1);

    sc = fixed({"Digit2000", "Digit2000"}, Policy::AlwaysFPGA);
    sc.fpga_baseline = FpgaBaselineConfig::PerCall;
    m = run(sc);
    CHECK(m.apps[0].completion.count() == 1629.0);
    CHECK(m.apps[1].completion.count() == 1629.0 * 2);
    CHECK(m.reconfigurations == 2);
}

TEST_CASE("XarTrek reconfigures while running on x86") {
    auto sc = fixed({"FaceDet320"}, Policy::XarTrek);
    sc.initial_image = "";
    sc.background.processes = 25;
    auto m = run(sc);
    // Load 26 > fpga_thr 16, kernel absent, 26 <= arm_thr 31: stay on x86.
    CHECK(m.apps[0].target == TargetKind::X86);
    CHECK(m.reconfigurations == 1);
    CHECK(m.mean_completion.count() == doctest::Approx(175.0 * 26 / 6));
}

TEST_CASE("reconfiguration requests are dropped while the device is busy") {
    auto sc = fixed({"FaceDet320", "FaceDet320"}, Policy::XarTrek);
    sc.initial_image = "";
    sc.background.processes = 40;
    auto m = run(sc);
    // Load 42 > arm_thr 31: ARM plus a reconfiguration, the second one dropped.
    CHECK(m.apps[0].target == TargetKind::ARM);
    CHECK(m.reconfigurations == 1);
    CHECK(m.dropped_reconfigurations == 1);
}

TEST_CASE("throughput runs stop at the deadline") {
    auto m = run(throughput(Policy::AlwaysX86, 0));
    REQUIRE(m.apps.size() == 1);
    CHECK(m.apps[0].calls_completed == static_cast<std::int64_t>(std::floor(60000.0 / 175.0)));
    CHECK(!m.apps[0].finished);
    CHECK(m.apps[0].completion.count() == 60000.0);
    CHECK(m.throughput == doctest::Approx(342.0 / 60.0));

    auto xt = run(throughput(Policy::XarTrek, 50));
    CHECK(xt.apps[0].target == TargetKind::FPGA);
    CHECK(xt.apps[0].calls_completed == static_cast<std::int64_t>(60000 / 332));

    auto per_call = throughput(Policy::AlwaysFPGA, 50);
    per_call.fpga_baseline = FpgaBaselineConfig::PerCall;
    auto fp = run(per_call);
    CHECK(fp.apps[0].calls_completed == static_cast<std::int64_t>(60000 / (332 + 400)));
    CHECK(xt.throughput >= fp.throughput);
}

TEST_CASE("gen_workload") {
    auto profiles = builtin::all_profiles();
    auto s = gen_workload(Periodic{30, 20, Millis{30000}, {}}, {}, profiles, 1);
    CHECK(s.arrivals.size() == 600);
    REQUIRE(s.wave_starts.size() == 30);
    CHECK(to_millis(s.wave_starts.back()).count() == 870000.0);
    CHECK(to_millis(s.arrivals.back().at).count() == 870000.0);

    auto a = gen_workload(RandomSet{5, true, {}}, {}, profiles, 42);
    auto b = gen_workload(RandomSet{5, true, {}}, {}, profiles, 42);
    REQUIRE(a.arrivals.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a.arrivals[i].app_id == b.arrivals[i].app_id);
        CHECK(a.arrivals[i].app_id != "FaceDet320_multi");
    }

    auto nr = gen_workload(RandomSet{5, false, {}}, {}, profiles, 7);
    std::set<std::string> distinct;
    for (const auto& x : nr.arrivals) {
        distinct.insert(x.app_id);
    }
    CHECK(distinct.size() == 5);
    CHECK_THROWS_AS((void)gen_workload(RandomSet{6, false, {}}, {}, profiles, 7), InvalidArgument);

    auto t = gen_workload(Throughput{"FaceDet320_multi", 1000, Millis{60000}, 1}, {}, profiles, 1);
    REQUIRE(t.arrivals.size() == 1);
    CHECK(t.arrivals[0].calls == 1000);
    CHECK(to_millis(*t.arrivals[0].deadline).count() == 60000.0);

    auto mix = gen_workload(Mix{10, "CG_A", "Digit2000", 0.4}, {110}, profiles, 1);
    CHECK(mix.foreground_count() == 10);
    CHECK(mix.arrivals.size() == 120);
    std::size_t cg = 0;
    for (const auto& x : mix.arrivals) {
        cg += x.app_id == "CG_A" ? 1 : 0;
    }
    CHECK(cg == 4);

    CHECK_THROWS_AS((void)gen_workload(Periodic{0, 1, Millis{1}, {}}, {}, profiles, 1),
                    InvalidArgument);
    CHECK_THROWS_AS((void)gen_workload(FixedSet{{"nope"}}, {}, profiles, 1), UnknownAppError);
}

TEST_CASE("run_repeated") {
    auto sc = fixed({"Digit2000", "CG_A"}, Policy::XarTrek);
    auto r = run_repeated(sc, 10);
    CHECK(r.mean_completion_ms.stddev == 0.0);
    CHECK(r.runs.size() == 10);

    auto one = run_repeated(sc, 1);
    CHECK(one.mean_completion_ms.mean == run(sc).mean_completion.count());
    CHECK(one.mean_completion_ms.stddev == 0.0);

    SimScenario rs = sc;
    rs.workload = RandomSet{5, true, {}};
    rs.seed = 1;
    auto x = run_repeated(rs, 10);
    auto y = run_repeated(rs, 10);
    CHECK(x.mean_completion_ms.mean == y.mean_completion_ms.mean);
    CHECK(x.mean_completion_ms.stddev == y.mean_completion_ms.stddev);
    std::set<std::vector<std::string>> sets;
    for (const auto& m : x.runs) {
        std::vector<std::string> ids;
        for (const auto& app : m.apps) {
            ids.push_back(app.app_id);
        }
        sets.insert(ids);
    }
    CHECK(sets.size() == 10);
    CHECK_THROWS_AS((void)run_repeated(sc, 0), InvalidArgument);
}

TEST_CASE("conservation of applications at every event") {
    SimScenario sc = fixed({}, Policy::XarTrek);
    sc.workload = Periodic{5, 20, Millis{3000}, {}};
    sc.background = {30, Millis{5000}, 3, Millis{4000}};
    RunOptions opts;
    std::size_t events = 0;
    opts.observer = [&](const Snapshot& s) {
        ++events;
        CHECK(s.completed + s.in_flight + s.not_started == s.total);
        CHECK(s.total == 100);
        CHECK(s.runnable_x86 >= 0);
    };
    auto m = run(sc, opts);
    CHECK(events > 100);
    CHECK(m.apps.size() == 100);
    for (const auto& app : m.apps) {
        CHECK(app.finished);
        CHECK(app.completion.count() > 0.0);
    }
}

TEST_CASE("x86 work is conserved under processor sharing") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SimScenario sc = fixed({}, Policy::AlwaysX86);
        sc.workload = Periodic{4, 15, Millis{2000}, {}};
        sc.background = {20, Millis{3000}, 2, Millis{5000}};
        sc.seed = seed;
        auto m = run(sc);
        double demand = 0.0;
        for (const auto& app : m.apps) {
            demand += find_profile(sc.profiles, app.app_id)->x86_exec_isolated.count();
        }
        // Background may still be running when the last application ends.
        double bg = 20.0 * 2 * 3000.0;
        CHECK(m.cpu_work_delivered[0] <= demand + bg + 1e-3);
        CHECK(m.cpu_work_delivered[0] >= demand - 1e-3);
    }
    // With background that ends before the foreground, the totals match exactly.
    SimScenario sc = fixed({"CG_A", "Digit2000", "FaceDet640", "CG_A"}, Policy::AlwaysX86);
    sc.background = {10, Millis{500}, 0, Millis{0}};
    auto m = run(sc);
    CHECK(m.cpu_work_delivered[0] ==
          doctest::Approx(2182.0 * 2 + 3521.0 + 885.0 + 10 * 500.0).epsilon(1e-9));
}

TEST_CASE("AlwaysARM is never faster than the best of x86 and FPGA at low load") {
    std::vector<std::string> apps{"CG_A", "FaceDet320", "FaceDet640", "Digit500", "Digit2000"};
    for (const auto& app : apps) {
        auto arm = run(fixed({app}, Policy::AlwaysARM)).mean_completion.count();
        auto x86 = run(fixed({app}, Policy::AlwaysX86)).mean_completion.count();
        auto fpga = run(fixed({app}, Policy::AlwaysFPGA)).mean_completion.count();
        CHECK(arm >= std::min(x86, fpga));
    }
    auto arm = run(fixed(apps, Policy::AlwaysARM)).mean_completion.count();
    auto x86 = run(fixed(apps, Policy::AlwaysX86)).mean_completion.count();
    auto fpga = run(fixed(apps, Policy::AlwaysFPGA)).mean_completion.count();
    CHECK(arm >= std::min(x86, fpga));
}

TEST_CASE("determinism of the metrics CSV") {
    SimScenario sc = fixed({}, Policy::XarTrek);
    sc.workload = Periodic{10, 20, Millis{1000}, {}};
    sc.background = {40, Millis{0}, 0, Millis{0}};
    sc.seed = 77;
    CHECK(csv_of(sc) == csv_of(sc));
}

TEST_CASE("errors") {
    CHECK_THROWS_AS((void)run(fixed({"nope"}, Policy::AlwaysX86)), UnknownAppError);

    auto sc = fixed({"CG_A"}, Policy::AlwaysX86);
    sc.time_cap = Millis{1000};
    CHECK_THROWS_AS((void)run(sc), SimTimeoutError);

    sc = fixed({"CG_A"}, Policy::AlwaysFPGA);
    sc.profiles = builtin::benchmark_profiles();
    for (auto& p : sc.profiles) {
        p.kernel.reset();
    }
    CHECK_THROWS_AS((void)run(sc), NoKernelError);

    sc = fixed({"BFS1000"}, Policy::AlwaysARM);
    sc.profiles = builtin::bfs_profiles();
    CHECK_THROWS_AS((void)run(sc), InvalidArgument);

    sc = fixed({"CG_A"}, Policy::XarTrek);
    sc.thresholds = ThresholdTable{};
    CHECK_THROWS_AS((void)run(sc), UnknownAppError);
}

TEST_CASE("empty workload") {
    auto m = run(fixed({}, Policy::XarTrek));
    CHECK(m.apps.empty());
    CHECK(m.mean_completion.count() == 0.0);
    CHECK(m.throughput == 0.0);
}

TEST_CASE("metrics CSV layout") {
    auto sc = fixed({"Digit2000"}, Policy::AlwaysFPGA);
    sc.id = "one";
    CHECK(csv_of(sc) ==
          "scenario_id,policy,repeat,app_id,completion_ms,target_executed,calls_completed\n"
          "one,fpga,0,Digit2000,1229,fpga,1\n");
}
