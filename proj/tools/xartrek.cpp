// xartrek: calibrate thresholds, pack kernels, run simulated experiments,
// serve the scheduler and talk to it.

#include "xartrek/builtin.hpp"
#include "xartrek/error.hpp"
#include "xartrek/experiment.hpp"
#include "xartrek/kvtext.hpp"
#include "xartrek/packer.hpp"
#include "xartrek/runtime.hpp"
#include "xartrek/threshold.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace xartrek;

namespace {

enum Exit : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kSchema = 3,
    kIo = 4,
    kInvalid = 5,
    kTimeout = 6,
    kStartup = 7,
    kUnreachable = 8,
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string endpoint;
    std::int64_t timeout_ms = 1000;
};

Endpoint endpoint_of(const Globals& g) {
    return g.endpoint.empty() ? default_endpoint() : Endpoint::parse(g.endpoint);
}

// Writes to the file named by `path`, or stdout for "" and "-".
template <class F>
void with_output(const std::string& path, F&& body) {
    if (path.empty() || path == "-") {
        body(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    body(out);
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

std::map<std::string, std::string> read_assignments(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.starts_with("kernel_id,")) {
            continue;
        }
        auto parts = kv::split_list(line);
        if (parts.size() != 2) {
            throw ParseError("expected 'kernel_id,image_id'", lineno);
        }
        if (!out.emplace(parts[0], parts[1]).second) {
            throw ParseError("kernel '" + parts[0] + "' assigned twice", lineno);
        }
    }
    return out;
}

PackingPlan plan_for(const std::vector<FunctionProfile>& profiles, const PlatformSpec& platform,
                     const std::string& plan_path) {
    if (!plan_path.empty()) {
        return load_plan(plan_path);
    }
    auto kernels = kernels_of(profiles);
    if (kernels.empty()) {
        return {};
    }
    return pack_auto(std::move(kernels), platform.fpga_area_capacity);
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ParseError& e) {
        std::cerr << "xartrek: invalid input: " << e.what() << '\n';
        return kSchema;
    } catch (const IoError& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kIo;
    } catch (const SimTimeoutError& e) {
        std::cerr << "xartrek: simulation timed out: " << e.what()
                  << " (raise time_cap_ms or shrink the workload)\n";
        return kTimeout;
    } catch (const StartupError& e) {
        std::cerr << "xartrek: cannot start server: " << e.what() << '\n';
        return kStartup;
    } catch (const InvalidArgument& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kInvalid;
    } catch (const OversizedKernelError& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kInvalid;
    } catch (const OverCapacityError& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kInvalid;
    } catch (const AssignmentError& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kInvalid;
    } catch (const UnknownAppError& e) {
        std::cerr << "xartrek: " << e.what() << " (add it to the profiles or threshold table)\n";
        return kInvalid;
    } catch (const UnknownKernelError& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kInvalid;
    } catch (const UnknownImageError& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kInvalid;
    } catch (const NoKernelError& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kInvalid;
    } catch (const Error& e) {
        std::cerr << "xartrek: " << e.what() << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "xartrek: unexpected error: " << e.what() << '\n';
        return kFailure;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Threshold-based x86/ARM/FPGA migration scheduler and simulator"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Seed override for every scenario");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--endpoint", g.endpoint,
                   "Scheduler endpoint: unix:/path or tcp:host:port")
        ->envname(kEndpointEnv);
    app.add_option("--timeout-ms", g.timeout_ms, "Client timeout in ms")
        ->check(CLI::PositiveNumber);
    app.fallthrough();

    int code = kOk;

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Estimate the threshold table from profiles");
    std::string cal_profiles;
    std::string cal_platform = "builtin";
    std::int64_t cal_max_load = 200;
    cal->add_option("--profiles", cal_profiles, "Profile file or builtin:<set>")->required();
    cal->add_option("--platform", cal_platform, "Platform file");
    cal->add_option("--max-load", cal_max_load, "Upper bound of the threshold search");
    cal->callback([&] {
        code = run_guarded([&] {
            auto profiles = exp::resolve_profiles(cal_profiles, fs::current_path());
            auto platform = exp::resolve_platform(cal_platform, fs::current_path());
            if (profiles.empty()) {
                std::cerr << "xartrek: warning: no profiles in '" << cal_profiles
                          << "', writing an empty table\n";
            }
            auto table = estimate_table(profiles, platform, processor_sharing_model(), cal_max_load);
            with_output(g.out, [&](std::ostream& o) { write_table(o, table); });
            return kOk;
        });
    });

    // pack
    auto* pack = app.add_subcommand("pack", "Group hardware kernels into configuration images");
    std::string pack_profiles;
    std::string pack_manual_path;
    std::string pack_format = "text";
    double pack_capacity = 0.0;
    pack->add_option("--profiles", pack_profiles, "Profile file or builtin:<set>")->required();
    pack->add_option("--capacity", pack_capacity, "FPGA area capacity (default: platform's)");
    pack->add_option("--manual", pack_manual_path, "CSV of kernel_id,image_id assignments");
    pack->add_option("--format", pack_format, "Plan format")->check(CLI::IsMember({"text", "csv"}));
    pack->callback([&] {
        code = run_guarded([&] {
            auto profiles = exp::resolve_profiles(pack_profiles, fs::current_path());
            double capacity =
                pack_capacity > 0.0 ? pack_capacity : builtin::platform().fpga_area_capacity;
            auto kernels = kernels_of(profiles);
            auto plan = pack_manual_path.empty()
                            ? pack_auto(kernels, capacity)
                            : pack_manual(read_assignments(pack_manual_path), kernels, capacity);
            with_output(g.out, [&](std::ostream& o) {
                if (pack_format == "csv") {
                    write_plan_csv(o, plan);
                } else {
                    write_plan_text(o, plan);
                }
            });
            print_summary(g.out.empty() || g.out == "-" ? std::cerr : std::cout,
                          plan_summary(plan, capacity));
            return kOk;
        });
    });

    // run
    auto* run = app.add_subcommand("run", "Run an experiment file against its policies");
    std::string run_config;
    run->add_option("config", run_config, "Experiment file")->required();
    run->callback([&] {
        code = run_guarded([&] {
            if (*seed_opt) {
                g.seed = seed_value;
            }
            auto suite = exp::load_suite(run_config, g.seed);
            fs::path dir = g.out.empty() ? fs::path("results") : fs::path(g.out);
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec) {
                throw IoError("cannot create '" + dir.string() + "': " + ec.message());
            }
            exp::RunOutput result;
            with_output((dir / "metrics.csv").string(),
                        [&](std::ostream& o) { result = exp::run_suite(suite, o); });
            with_output((dir / "summary.csv").string(),
                        [&](std::ostream& o) { exp::write_summary_csv(o, result.summary); });
            exp::print_summary(std::cout, result.summary);
            return kOk;
        });
    });

    // serve
    auto* serve = app.add_subcommand("serve", "Run the scheduler server");
    std::string serve_table = "builtin:table2";
    std::string serve_profiles = "builtin:table1";
    std::string serve_platform = "builtin";
    std::string serve_plan;
    std::string serve_image;
    std::int64_t serve_load = -1;
    serve->add_option("--table", serve_table, "Threshold table CSV")->envname("XARTREK_TABLE");
    serve->add_option("--profiles", serve_profiles, "Profiles used to pack kernels");
    serve->add_option("--platform", serve_platform, "Platform file");
    serve->add_option("--plan", serve_plan, "Packing plan file (default: pack the profiles)");
    serve->add_option("--initial-image", serve_image, "Image loaded at start (default: first)");
    serve->add_option("--load", serve_load, "Report this x86 load instead of /proc/stat");
    serve->callback([&] {
        code = run_guarded([&] {
            ServerConfig cfg;
            cfg.endpoint = endpoint_of(g);
            cfg.platform = exp::resolve_platform(serve_platform, fs::current_path());
            cfg.table = exp::resolve_table(serve_table, fs::current_path());
            auto profiles = exp::resolve_profiles(serve_profiles, fs::current_path());
            auto plan = plan_for(profiles, cfg.platform, serve_plan);
            std::optional<std::string> image;
            if (!serve_image.empty()) {
                image = serve_image;
            } else if (!plan.empty()) {
                image = plan.front().image_id;
            }
            cfg.fpga = FpgaState::with_plan(plan, image);
            cfg.load_source = serve_load >= 0 ? fixed_load(serve_load) : proc_load();
            cfg.log = stderr_log();
            SchedulerServer server(std::move(cfg));
            return server.serve();
        });
    });

    // client
    auto* client = app.add_subcommand("client", "Talk to a running scheduler server");
    std::string action;
    std::string c_app;
    std::string c_function;
    std::string c_target = "x86";
    double c_exec = 0.0;
    std::int64_t c_load = 0;
    client->add_option("action", action, "request | report | kernel-query | shutdown")
        ->required()
        ->check(CLI::IsMember({"request", "report", "kernel-query", "shutdown"}));
    client->add_option("--app", c_app, "Application id");
    client->add_option("--function", c_function, "Function id");
    client->add_option("--target", c_target, "Target that ran (report)");
    client->add_option("--exec-ms", c_exec, "Measured execution time (report)");
    client->add_option("--load", c_load, "x86 load when the call started (report)");
    client->callback([&] {
        code = run_guarded([&] {
            ClientOptions opts;
            opts.endpoint = endpoint_of(g);
            opts.timeout = std::chrono::milliseconds(g.timeout_ms);
            if ((action == "request" || action == "report") && c_app.empty()) {
                throw InvalidArgument("client " + action + " needs --app");
            }
            std::optional<SchedulerSession> session;
            try {
                session.emplace(opts);
                if (action == "request") {
                    std::cout << int(session->request(c_app, c_function)) << '\n';
                } else if (action == "report") {
                    auto target = parse_target(c_target);
                    if (!target) {
                        throw InvalidArgument("unknown target '" + c_target + "'");
                    }
                    session->report(ExecutionRecord{c_app, *target, Millis{c_exec}, c_load});
                } else if (action == "kernel-query") {
                    for (const auto& k : session->query_kernels()) {
                        std::cout << k << '\n';
                    }
                } else {
                    session->shutdown_server();
                }
            } catch (const InvalidArgument&) {
                throw;
            } catch (const Error& e) {
                std::cerr << "xartrek: warning: scheduler at " << opts.endpoint.to_string()
                          << " unavailable (" << e.what() << ")";
                if (action == "request") {
                    std::cerr << ", staying on x86";
                    std::cout << "0\n";
                }
                std::cerr << '\n';
                return kUnreachable;
            }
            return kOk;
        });
    });

    // report
    auto* report = app.add_subcommand("report", "Aggregate CSV results into per-figure matrices");
    std::vector<std::string> inputs;
    std::string metric;
    report->add_option("inputs", inputs, "metrics.csv or summary.csv files");
    report->add_option("--metric", metric, "Only this metric")
        ->check(CLI::IsMember({"mean_completion_ms", "throughput"}));
    report->callback([&] {
        code = run_guarded([&] {
            std::vector<fs::path> paths(inputs.begin(), inputs.end());
            auto matrices = exp::build_report(paths, metric);
            if (matrices.empty()) {
                std::cerr << "xartrek: no data to report\n";
                return kOk;
            }
            fs::path dir = g.out.empty() ? fs::path("report") : fs::path(g.out);
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec) {
                throw IoError("cannot create '" + dir.string() + "': " + ec.message());
            }
            for (const auto& m : matrices) {
                auto file = dir / (m.experiment + "_" + m.metric + ".csv");
                with_output(file.string(), [&](std::ostream& o) { exp::write_matrix_csv(o, m); });
                std::cout << file.string() << '\n';
            }
            return kOk;
        });
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    return code;
}
