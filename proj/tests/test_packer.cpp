#include "xartrek/builtin.hpp"
#include "xartrek/error.hpp"
#include "xartrek/packer.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

using namespace xartrek;

namespace {

std::vector<KernelResource> kernels(std::initializer_list<std::pair<const char*, double>> list) {
    std::vector<KernelResource> out;
    for (const auto& [id, area] : list) {
        out.push_back({id, area, std::string(id) + "_fn"});
    }
    return out;
}

std::set<std::string> ids(const ConfigImage& img) {
    std::set<std::string> out;
    for (const auto& k : img.kernels) {
        out.insert(k.kernel_id);
    }
    return out;
}

void check_plan(const PackingPlan& plan, const std::vector<KernelResource>& input, double capacity) {
    std::multiset<std::string> seen;
    for (const auto& img : plan) {
        double sum = 0.0;
        for (const auto& k : img.kernels) {
            sum += k.area;
            seen.insert(k.kernel_id);
        }
        CHECK(img.total_area == doctest::Approx(sum));
        CHECK(img.total_area <= capacity + 1e-9);
        CHECK(!img.kernels.empty());
    }
    std::multiset<std::string> expected;
    for (const auto& k : input) {
        expected.insert(k.kernel_id);
    }
    CHECK(seen == expected);
}

} // namespace

TEST_CASE("pack_auto examples") {
    auto plan = pack_auto(kernels({{"a", 40}, {"b", 30}, {"c", 30}}), 100);
    REQUIRE(plan.size() == 1);
    CHECK(ids(plan[0]) == std::set<std::string>{"a", "b", "c"});
    CHECK(plan[0].image_id == "xclbin-0");

    auto in = kernels({{"a", 60}, {"b", 50}, {"c", 40}});
    plan = pack_auto(in, 100);
    REQUIRE(plan.size() == 2);
    CHECK(plan.size() == oracle::brute_force_bins({60, 50, 40}, 100));
    CHECK(ids(plan[0]) == std::set<std::string>{"a", "c"});
    CHECK(ids(plan[1]) == std::set<std::string>{"b"});

    try {
        (void)pack_auto(kernels({{"a", 120}}), 100);
        FAIL("expected OversizedKernelError");
    } catch (const OversizedKernelError& e) {
        CHECK(e.kernel_id() == "a");
    }
}

TEST_CASE("pack_auto edge cases") {
    CHECK(pack_auto({}, 100).empty());
    CHECK_THROWS_AS((void)pack_auto(kernels({{"a", 1}}), 0), InvalidArgument);
    CHECK_THROWS_AS((void)pack_auto(kernels({{"a", 1}, {"a", 2}}), 10), InvalidArgument);
    auto exact = pack_auto(kernels({{"a", 100}}), 100);
    REQUIRE(exact.size() == 1);
    // Ties broken by kernel id, so input order does not matter.
    auto p1 = pack_auto(kernels({{"x", 30}, {"y", 30}, {"z", 50}}), 60);
    auto p2 = pack_auto(kernels({{"z", 50}, {"y", 30}, {"x", 30}}), 60);
    CHECK(p1 == p2);
}

TEST_CASE("builtin kernels fit in one image") {
    auto plan = pack_auto(kernels_of(builtin::benchmark_profiles()), 100);
    REQUIRE(plan.size() == 1);
    CHECK(plan[0].kernels.size() == 5);
    CHECK(kernels_of(builtin::all_profiles()).size() == 5);
}

TEST_CASE("kernels_of rejects conflicting areas") {
    auto ps = builtin::all_profiles();
    ps.back().kernel->area = 99;
    CHECK_THROWS_AS((void)kernels_of(ps), InvalidArgument);
}

TEST_CASE("pack_manual examples") {
    auto ks = kernels({{"a", 40}, {"b", 30}});
    auto plan = pack_manual({{"a", "img1"}, {"b", "img1"}}, ks, 100);
    REQUIRE(plan.size() == 1);
    CHECK(plan[0].image_id == "img1");
    CHECK(plan[0].total_area == 70);

    plan = pack_manual({{"a", "img1"}, {"b", "img2"}}, ks, 100);
    REQUIRE(plan.size() == 2);
    CHECK(ids(plan[0]) == std::set<std::string>{"a"});
    CHECK(ids(plan[1]) == std::set<std::string>{"b"});

    try {
        (void)pack_manual({{"a", "img1"}, {"b", "img1"}}, kernels({{"a", 60}, {"b", 50}}), 100);
        FAIL("expected OverCapacityError");
    } catch (const OverCapacityError& e) {
        CHECK(e.image_id() == "img1");
    }
    CHECK_THROWS_AS((void)pack_manual({{"a", "img1"}}, ks, 100), AssignmentError);
    CHECK_THROWS_AS((void)pack_manual({{"a", "i"}, {"b", "i"}, {"zz", "i"}}, ks, 100),
                    AssignmentError);
}

TEST_CASE("plan summary") {
    auto plan = pack_manual({{"a", "i1"}, {"b", "i2"}}, kernels({{"a", 100}, {"b", 50}}), 100);
    auto s = plan_summary(plan, 100);
    REQUIRE(s.image_count() == 2);
    CHECK(s.images[0].utilization == 1.0);
    CHECK(s.images[1].utilization == 0.5);
    CHECK(plan_summary({}, 100).image_count() == 0);
    auto one = plan_summary(pack_auto(kernels({{"a", 100}}), 100), 100);
    CHECK(one.images[0].utilization == 1.0);
}

TEST_CASE("plan export and import") {
    auto plan = pack_auto(kernels_of(builtin::all_profiles()), 50);
    std::stringstream text;
    write_plan_text(text, plan);
    CHECK(read_plan_text(text) == plan);

    std::ostringstream csv;
    write_plan_csv(csv, pack_auto(kernels({{"a", 60}, {"b", 50}}), 100));
    CHECK(csv.str() == "image_id,kernel_id,area\nxclbin-0,a,60\nxclbin-1,b,50\n");

    CHECK(image_for_kernel(plan, "KNL_HW_CG_A") != nullptr);
    CHECK(image_for_kernel(plan, "nope") == nullptr);
}

TEST_CASE("pack_auto is feasible on fuzzed inputs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> cap_dist(10.0, 200.0);
    for (int trial = 0; trial < 300; ++trial) {
        double cap = cap_dist(rng);
        std::uniform_real_distribution<double> area(0.01, cap);
        std::vector<KernelResource> ks;
        int n = static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            ks.push_back({"k" + std::to_string(i), area(rng), ""});
        }
        auto plan = pack_auto(ks, cap);
        check_plan(plan, ks, cap);
    }
}

TEST_CASE("pack_auto matches brute force on small integer instances") {
    std::mt19937_64 rng(5);
    int worse = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int n = 1 + static_cast<int>(rng() % 7);
        std::vector<KernelResource> ks;
        std::vector<double> areas;
        for (int i = 0; i < n; ++i) {
            double a = 1 + static_cast<double>(rng() % 10);
            ks.push_back({"k" + std::to_string(i), a, ""});
            areas.push_back(a);
        }
        auto plan = pack_auto(ks, 10);
        auto best = oracle::brute_force_bins(areas, 10);
        CHECK(plan.size() >= best);
        worse += plan.size() > best ? 1 : 0;
    }
    // FFD is not optimal in general; this corpus happens to be easy.
    CHECK(worse == 0);
}
