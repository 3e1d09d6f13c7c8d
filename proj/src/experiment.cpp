#include "xartrek/experiment.hpp"

#include "xartrek/builtin.hpp"
#include "xartrek/error.hpp"
#include "xartrek/kvtext.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace xartrek::exp {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kBuiltin = "builtin:";

fs::path resolve_path(const std::string& ref, const fs::path& base_dir) {
    fs::path p(ref);
    return p.is_absolute() ? p : base_dir / p;
}

} // namespace

std::vector<FunctionProfile> resolve_profiles(const std::string& ref, const fs::path& base_dir) {
    if (ref.starts_with(kBuiltin)) {
        auto name = std::string_view(ref).substr(kBuiltin.size());
        if (name == "table1") return builtin::benchmark_profiles();
        if (name == "facedet_multi") return {builtin::facedet_multi_profile()};
        if (name == "bfs") return builtin::bfs_profiles();
        if (name == "all") return builtin::all_profiles();
        throw InvalidArgument("unknown builtin profile set '" + ref + "'");
    }
    return load_profiles(resolve_path(ref, base_dir).string());
}

PlatformSpec resolve_platform(const std::string& ref, const fs::path& base_dir) {
    if (ref == "builtin") {
        return builtin::platform();
    }
    return load_platform(resolve_path(ref, base_dir).string());
}

ThresholdTable resolve_table(const std::string& ref, const fs::path& base_dir) {
    if (ref == "builtin:table2") {
        return builtin::hardware_thresholds();
    }
    return table_load(resolve_path(ref, base_dir).string());
}

namespace {

struct Defaults {
    std::string profiles = "builtin:all";
    std::string platform = "builtin";
    std::optional<std::string> table;
    std::int64_t repeats = 1;
    std::uint64_t seed = 1;
    std::string policies = "xartrek,x86,fpga";
    Load max_load = 200;
};

const kv::Entry* pick(const kv::Record& r, std::string_view key) { return r.find(key); }

std::vector<std::int64_t> integer_list(const kv::Entry& e) {
    std::vector<std::int64_t> out;
    for (const auto& item : kv::split_list(e.value)) {
        out.push_back(kv::to_integer(item, e.line));
    }
    if (out.empty()) {
        throw ParseError("'" + e.key + "' needs at least one value", e.line);
    }
    return out;
}

std::vector<double> number_list(const kv::Entry& e) {
    std::vector<double> out;
    for (const auto& item : kv::split_list(e.value)) {
        out.push_back(kv::to_number(item, e.line));
    }
    if (out.empty()) {
        throw ParseError("'" + e.key + "' needs at least one value", e.line);
    }
    return out;
}

std::vector<sim::Policy> policy_list(const std::string& text, std::size_t line) {
    std::vector<sim::Policy> out;
    for (const auto& item : kv::split_list(text)) {
        auto p = sim::parse_policy(item);
        if (!p) {
            throw ParseError("unknown policy '" + item + "'", line);
        }
        if (std::find(out.begin(), out.end(), *p) == out.end()) {
            out.push_back(*p);
        }
    }
    if (out.empty()) {
        throw ParseError("at least one policy is required", line);
    }
    return out;
}

void apply_defaults(const kv::Record& r, Defaults& d) {
    if (const auto* e = pick(r, "profiles")) d.profiles = e->value;
    if (const auto* e = pick(r, "platform")) d.platform = e->value;
    if (const auto* e = pick(r, "table")) {
        // An empty value switches back to estimated thresholds.
        d.table = e->value.empty() ? std::nullopt : std::optional<std::string>(e->value);
    }
    if (auto v = r.integer_opt("repeats")) d.repeats = *v;
    if (auto v = r.integer_opt("seed")) {
        if (*v < 0) {
            throw ParseError("seed must be >= 0", r.find("seed")->line);
        }
        d.seed = static_cast<std::uint64_t>(*v);
    }
    if (const auto* e = pick(r, "policies")) d.policies = e->value;
    if (const auto* e = pick(r, "policy")) d.policies = e->value;
    if (auto v = r.integer_opt("max_load")) d.max_load = *v;
}

struct Dim {
    std::string name;
    std::vector<std::string> labels;
};

Experiment parse_experiment(const kv::Record& r, Defaults d, const fs::path& base_dir,
                            std::optional<std::uint64_t> seed_override) {
    r.expect_keys({"id", "workload", "apps", "set_sizes", "n", "with_replacement", "pool", "waves",
                   "apps_per_wave", "interval_ms", "app", "images", "duration_ms", "runs",
                   "heavy_app", "light_app", "set_size", "fractions", "background",
                   "total_processes", "background_service_ms", "background_waves",
                   "background_interval_ms", "fpga_config", "initial_image", "policies", "policy",
                   "repeats", "seed", "profiles", "platform", "table", "plan", "max_load",
                   "time_cap_ms"});
    apply_defaults(r, d);
    if (seed_override) {
        d.seed = *seed_override;
    }

    Experiment ex;
    ex.id = r.str_or("id", "scenario");
    if (ex.id.empty() || ex.id.find_first_of(",/\n") != std::string::npos) {
        throw ParseError("experiment id must be non-empty without ',' or '/'", r.line());
    }
    ex.repeats = d.repeats;
    if (ex.repeats < 1) {
        throw ParseError("repeats must be >= 1", r.line());
    }
    {
        const auto* e = r.find("policy") ? r.find("policy") : r.find("policies");
        ex.policies = policy_list(d.policies, e ? e->line : r.line());
    }

    sim::SimScenario base;
    base.platform = resolve_platform(d.platform, base_dir);
    base.profiles = resolve_profiles(d.profiles, base_dir);
    if (d.table) {
        base.thresholds = resolve_table(*d.table, base_dir);
    }
    base.max_load = d.max_load;
    base.seed = d.seed;
    if (const auto* e = r.find("plan")) {
        base.plan = load_plan(resolve_path(e->value, base_dir).string());
    }
    if (const auto* e = r.find("initial_image")) {
        base.initial_image = e->value == "none" ? std::string() : e->value;
    }
    if (const auto* e = r.find("fpga_config")) {
        if (e->value == "preloaded") {
            base.fpga_baseline = sim::FpgaBaselineConfig::Preloaded;
        } else if (e->value == "percall" || e->value == "per-call") {
            base.fpga_baseline = sim::FpgaBaselineConfig::PerCall;
        } else {
            throw ParseError("fpga_config must be 'preloaded' or 'percall'", e->line);
        }
    }
    if (auto v = r.number_opt("time_cap_ms")) {
        base.time_cap = Millis{*v};
    }
    base.background.service = Millis{r.number_opt("background_service_ms").value_or(0.0)};
    base.background.waves = r.integer_opt("background_waves").value_or(0);
    base.background.interval = Millis{r.number_opt("background_interval_ms").value_or(0.0)};

    auto pool = r.has("pool") ? kv::split_list(r.str("pool")) : std::vector<std::string>{};
    const std::string kind = r.str_or("workload", "fixed");

    // Main sweep: one workload per entry, plus its foreground size.
    std::vector<std::pair<sim::Workload, std::int64_t>> workloads;
    Dim main_dim;
    if (kind == "fixed") {
        sim::FixedSet w{kv::split_list(r.str("apps"))};
        auto n = static_cast<std::int64_t>(w.apps.size());
        workloads.emplace_back(std::move(w), n);
    } else if (kind == "random") {
        const auto* e = r.find("set_sizes") ? r.find("set_sizes") : r.find("n");
        if (e == nullptr) {
            throw ParseError("random workload needs 'set_sizes'", r.line());
        }
        bool repl = true;
        if (const auto* wr = r.find("with_replacement")) {
            repl = kv::to_bool(wr->value, wr->line);
        }
        main_dim.name = "n";
        for (auto n : integer_list(*e)) {
            workloads.emplace_back(sim::RandomSet{n, repl, pool}, n);
            main_dim.labels.push_back(std::to_string(n));
        }
    } else if (kind == "periodic") {
        sim::Periodic w;
        w.waves = r.integer("waves");
        w.apps_per_wave = r.integer("apps_per_wave");
        w.interval = Millis{r.number_opt("interval_ms").value_or(30000.0)};
        w.pool = pool;
        workloads.emplace_back(std::move(w), 0);
    } else if (kind == "throughput") {
        sim::Throughput w;
        w.app = r.str("app");
        w.images = r.integer_opt("images").value_or(1000);
        w.duration = Millis{r.number_opt("duration_ms").value_or(60000.0)};
        w.runs = r.integer_opt("runs").value_or(1);
        workloads.emplace_back(std::move(w), 1);
    } else if (kind == "mix") {
        const auto* e = r.find("fractions");
        if (e == nullptr) {
            throw ParseError("mix workload needs 'fractions'", r.line());
        }
        auto size = r.integer_opt("set_size").value_or(10);
        main_dim.name = "fraction";
        for (double f : number_list(*e)) {
            workloads.emplace_back(sim::Mix{size, r.str("heavy_app"), r.str("light_app"), f}, size);
            main_dim.labels.push_back(kv::format_number(f));
        }
    } else {
        throw ParseError("unknown workload '" + kind + "'", r.line());
    }

    // Background sweep, either absolute or as a total process count.
    std::vector<std::int64_t> bg_values{0};
    bool total = false;
    Dim bg_dim;
    if (const auto* e = r.find("total_processes")) {
        if (kind == "periodic") {
            throw ParseError("total_processes does not apply to periodic workloads", e->line);
        }
        bg_values = integer_list(*e);
        total = true;
        bg_dim.name = "total";
    } else if (const auto* e2 = r.find("background")) {
        bg_values = integer_list(*e2);
        bg_dim.name = "bg";
    }
    for (auto v : bg_values) {
        bg_dim.labels.push_back(std::to_string(v));
    }

    for (std::size_t i = 0; i < workloads.size(); ++i) {
        for (std::size_t j = 0; j < bg_values.size(); ++j) {
            Point pt;
            pt.scenario = base;
            pt.scenario.workload = workloads[i].first;
            auto bg = bg_values[j];
            if (total) {
                bg -= workloads[i].second;
                if (bg < 0) {
                    throw ParseError("total_processes smaller than the application set", r.line());
                }
            }
            pt.scenario.background.processes = bg;
            std::vector<std::pair<std::string, std::string>> parts;
            if (main_dim.labels.size() > 1) {
                parts.emplace_back(main_dim.name, main_dim.labels[i]);
            }
            if (bg_dim.labels.size() > 1) {
                parts.emplace_back(bg_dim.name, bg_dim.labels[j]);
            }
            pt.scenario_id = ex.id;
            for (std::size_t k = 0; k < parts.size(); ++k) {
                pt.scenario_id += "/" + parts[k].first + "=" + parts[k].second;
                pt.x_name += (k ? "+" : "") + parts[k].first;
                pt.x_value += (k ? "+" : "") + parts[k].second;
            }
            pt.scenario.id = pt.scenario_id;
            ex.points.push_back(std::move(pt));
        }
    }
    return ex;
}

} // namespace

Suite parse_suite(std::istream& in, const fs::path& base_dir, std::optional<std::uint64_t> seed) {
    Defaults d;
    Suite suite;
    for (const auto& r : kv::parse(in)) {
        if (r.section() == "suite") {
            r.expect_keys({"profiles", "platform", "table", "repeats", "seed", "policies", "policy",
                           "max_load"});
            apply_defaults(r, d);
        } else if (r.section() == "experiment" || r.section() == "scenario") {
            suite.experiments.push_back(parse_experiment(r, d, base_dir, seed));
        } else {
            throw ParseError("unknown section [" + r.section() + "]", r.line());
        }
    }
    for (std::size_t i = 0; i < suite.experiments.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (suite.experiments[i].id == suite.experiments[j].id) {
                throw ParseError("duplicate experiment id '" + suite.experiments[i].id + "'", 0);
            }
        }
    }
    return suite;
}

Suite load_suite(const fs::path& path, std::optional<std::uint64_t> seed) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open experiment file '" + path.string() + "'");
    }
    return parse_suite(in, path.parent_path(), seed);
}

std::optional<double> time_gain(double baseline, double xartrek) {
    if (baseline == 0.0) {
        return std::nullopt;
    }
    return (baseline - xartrek) / baseline * 100.0;
}

std::optional<double> throughput_gain(double baseline, double xartrek) {
    if (baseline == 0.0) {
        return std::nullopt;
    }
    return (xartrek - baseline) / baseline * 100.0;
}

RunOutput run_suite(const Suite& suite, std::ostream& metrics) {
    RunOutput out;
    sim::write_metrics_header(metrics);
    for (const auto& ex : suite.experiments) {
        for (const auto& pt : ex.points) {
            std::size_t first = out.summary.size();
            for (auto policy : ex.policies) {
                sim::SimScenario sc = pt.scenario;
                sc.policy = policy;
                auto rm = sim::run_repeated(sc, ex.repeats);
                for (std::size_t i = 0; i < rm.runs.size(); ++i) {
                    sim::write_metrics_rows(metrics, pt.scenario_id, policy,
                                            static_cast<std::int64_t>(i), rm.runs[i]);
                }
                SummaryRow row;
                row.experiment = ex.id;
                row.scenario_id = pt.scenario_id;
                row.x_name = pt.x_name;
                row.x_value = pt.x_value;
                row.policy = policy;
                row.completion_ms = rm.mean_completion_ms;
                row.throughput = rm.throughput;
                out.summary.push_back(std::move(row));
            }
            auto begin = out.summary.begin() + static_cast<std::ptrdiff_t>(first);
            auto xt = std::find_if(begin, out.summary.end(), [](const SummaryRow& s) {
                return s.policy == sim::Policy::XarTrek;
            });
            if (xt == out.summary.end()) {
                continue;
            }
            for (auto it = begin; it != out.summary.end(); ++it) {
                if (it->policy == sim::Policy::XarTrek) {
                    continue;
                }
                it->time_gain_pct = time_gain(it->completion_ms.mean, xt->completion_ms.mean);
                it->throughput_gain_pct = throughput_gain(it->throughput.mean, xt->throughput.mean);
            }
        }
    }
    return out;
}

namespace {

std::string opt_number(const std::optional<double>& v) {
    return v ? kv::format_number(*v) : std::string();
}

} // namespace

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "experiment,scenario_id,x_name,x_value,policy,mean_completion_ms,stddev_completion_ms,"
           "throughput,stddev_throughput,xartrek_time_gain_pct,xartrek_throughput_gain_pct\n";
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.scenario_id << ',' << r.x_name << ',' << r.x_value << ','
            << sim::to_string(r.policy) << ',' << kv::format_number(r.completion_ms.mean) << ','
            << kv::format_number(r.completion_ms.stddev) << ','
            << kv::format_number(r.throughput.mean) << ',' << kv::format_number(r.throughput.stddev)
            << ',' << opt_number(r.time_gain_pct) << ',' << opt_number(r.throughput_gain_pct)
            << '\n';
    }
}

void print_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
    std::size_t width = 8;
    for (const auto& r : rows) {
        width = std::max(width, r.scenario_id.size());
    }
    auto flags = out.flags();
    out << std::left << std::setw(static_cast<int>(width) + 2) << "scenario" << std::setw(9)
        << "policy" << std::right << std::setw(12) << "mean_ms" << std::setw(11) << "sd_ms"
        << std::setw(10) << "items/s" << std::setw(11) << "time_gain" << std::setw(10)
        << "thr_gain" << '\n';
    out << std::fixed;
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(width) + 2) << r.scenario_id << std::setw(9)
            << sim::to_string(r.policy) << std::right << std::setprecision(1) << std::setw(12)
            << r.completion_ms.mean << std::setw(11) << r.completion_ms.stddev
            << std::setprecision(3) << std::setw(10) << r.throughput.mean;
        auto pct = [&](const std::optional<double>& v) {
            if (v) {
                std::ostringstream s;
                s << std::fixed << std::setprecision(1) << *v << '%';
                out << std::setw(10) << s.str();
            } else {
                out << std::setw(10) << "-";
            }
        };
        out << ' ';
        pct(r.time_gain_pct);
        pct(r.throughput_gain_pct);
        out << '\n';
    }
    out.flags(flags);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

struct MatrixBuilder {
    std::map<std::pair<std::string, std::string>, Matrix> by_key;
    std::vector<std::pair<std::string, std::string>> order;

    void set(const std::string& experiment, const std::string& metric, const std::string& x_name,
             const std::string& column, const std::string& row, double value) {
        auto key = std::make_pair(experiment, metric);
        auto [it, fresh] = by_key.try_emplace(key);
        Matrix& m = it->second;
        if (fresh) {
            order.push_back(key);
            m.experiment = experiment;
            m.metric = metric;
            m.x_name = x_name;
        }
        auto find_or_add = [](std::vector<std::string>& v, const std::string& s) {
            auto f = std::find(v.begin(), v.end(), s);
            if (f != v.end()) {
                return static_cast<std::size_t>(f - v.begin());
            }
            v.push_back(s);
            return v.size() - 1;
        };
        auto ci = find_or_add(m.columns, column);
        auto ri = find_or_add(m.rows, row);
        m.cells.resize(m.rows.size());
        for (auto& cells : m.cells) {
            cells.resize(m.columns.size());
        }
        m.cells[ri][ci] = value;
    }
};

// "fig6/bg=50" -> {"fig6", "bg", "50"}; "fig7" -> {"fig7", "", ""}.
std::array<std::string, 3> split_scenario_id(const std::string& id) {
    auto slash = id.find('/');
    if (slash == std::string::npos) {
        return {id, "", ""};
    }
    std::string names;
    std::string values;
    std::istringstream parts(id.substr(slash + 1));
    std::string part;
    while (std::getline(parts, part, '/')) {
        auto eq = part.find('=');
        auto sep = names.empty() && values.empty() ? "" : "+";
        names += sep + part.substr(0, eq);
        values += sep + (eq == std::string::npos ? std::string() : part.substr(eq + 1));
    }
    return {id.substr(0, slash), names, values};
}

} // namespace

std::vector<Matrix> build_report(const std::vector<fs::path>& inputs, const std::string& metric) {
    MatrixBuilder b;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot open '" + path.string() + "'");
        }
        std::string line;
        if (!std::getline(in, line)) {
            continue;
        }
        auto header = split_csv(line);
        const bool is_metrics = header.size() >= 6 && header[0] == "scenario_id" &&
                                header[1] == "policy" && header[4] == "completion_ms";
        const bool is_summary = header.size() == 11 && header[0] == "experiment" &&
                                header[5] == "mean_completion_ms" && header[7] == "throughput";
        if (!is_metrics && !is_summary) {
            throw ParseError(path.string() + ": not a metrics or summary CSV", 1);
        }
        // Mean completion per (scenario, policy) from raw metrics.
        std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> sums;
        std::vector<std::pair<std::string, std::string>> seen;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line == "\r") {
                continue;
            }
            auto f = split_csv(line);
            if (f.size() != header.size()) {
                throw ParseError(path.string() + ": expected " + std::to_string(header.size()) +
                                     " columns",
                                 lineno);
            }
            if (is_metrics) {
                auto key = std::make_pair(f[0], f[1]);
                auto [it, fresh] = sums.try_emplace(key, 0.0, 0);
                if (fresh) {
                    seen.push_back(key);
                }
                it->second.first += kv::to_number(f[4], lineno);
                it->second.second += 1;
            } else {
                const std::string col = f[3].empty() ? "all" : f[3];
                if (metric.empty() || metric == "mean_completion_ms") {
                    b.set(f[0], "mean_completion_ms", f[2], col, f[4], kv::to_number(f[5], lineno));
                }
                if (metric.empty() || metric == "throughput") {
                    b.set(f[0], "throughput", f[2], col, f[4], kv::to_number(f[7], lineno));
                }
            }
        }
        if (is_metrics && (metric.empty() || metric == "mean_completion_ms")) {
            for (const auto& key : seen) {
                const auto& [sum, n] = sums.at(key);
                auto [ex, x_name, x_value] = split_scenario_id(key.first);
                b.set(ex, "mean_completion_ms", x_name, x_value.empty() ? "all" : x_value,
                      key.second, sum / static_cast<double>(n));
            }
        }
    }
    std::vector<Matrix> out;
    for (const auto& key : b.order) {
        out.push_back(std::move(b.by_key.at(key)));
    }
    return out;
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
    out << "policy";
    for (const auto& c : m.columns) {
        out << ',' << (m.x_name.empty() ? c : m.x_name + "=" + c);
    }
    out << '\n';
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        out << m.rows[r];
        for (const auto& cell : m.cells[r]) {
            out << ',' << (cell ? kv::format_number(*cell) : std::string());
        }
        out << '\n';
    }
}

} // namespace xartrek::exp
