#pragma once

// Experiment suites and the file-level commands behind the xartrek CLI.
//
// An experiment file is kv text with an optional [suite] record holding
// defaults, followed by [experiment] (or [scenario]) records. Paths are
// resolved against the file's directory; "builtin:<name>" selects a bundled
// data set instead of a file.

#include "xartrek/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace xartrek::exp {

/// One fully specified simulation of a sweep.
struct Point {
    std::string scenario_id;
    /// Swept parameter, e.g. "bg" and "50". Empty when nothing is swept.
    std::string x_name;
    std::string x_value;
    sim::SimScenario scenario;
};

struct Experiment {
    std::string id;
    std::vector<sim::Policy> policies;
    std::int64_t repeats = 1;
    std::vector<Point> points;
};

struct Suite {
    std::vector<Experiment> experiments;
};

/// `seed` overrides every seed in the file.
[[nodiscard]] Suite parse_suite(std::istream& in, const std::filesystem::path& base_dir,
                                std::optional<std::uint64_t> seed = std::nullopt);
[[nodiscard]] Suite load_suite(const std::filesystem::path& path,
                               std::optional<std::uint64_t> seed = std::nullopt);

// Data sets: "builtin:table1", "builtin:facedet_multi", "builtin:bfs",
// "builtin:all" for profiles; "builtin:table2" for thresholds; "builtin" for
// the platform. Anything else is a path.
[[nodiscard]] std::vector<FunctionProfile> resolve_profiles(const std::string& ref,
                                                            const std::filesystem::path& base_dir);
[[nodiscard]] PlatformSpec resolve_platform(const std::string& ref,
                                            const std::filesystem::path& base_dir);
[[nodiscard]] ThresholdTable resolve_table(const std::string& ref,
                                           const std::filesystem::path& base_dir);

struct SummaryRow {
    std::string experiment;
    std::string scenario_id;
    std::string x_name;
    std::string x_value;
    sim::Policy policy = sim::Policy::XarTrek;
    sim::Aggregate completion_ms;
    sim::Aggregate throughput;
    /// Gain of XarTrek over this row's policy, in percent.
    std::optional<double> time_gain_pct;
    std::optional<double> throughput_gain_pct;
};

struct RunOutput {
    std::vector<SummaryRow> summary;
};

/// Runs every point under every policy. Writes the metrics CSV rows to
/// `metrics` (header included).
[[nodiscard]] RunOutput run_suite(const Suite& suite, std::ostream& metrics);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void print_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

/// (baseline - xartrek) / baseline and (xartrek - baseline) / baseline, in
/// percent; nullopt when the baseline is zero.
[[nodiscard]] std::optional<double> time_gain(double baseline, double xartrek);
[[nodiscard]] std::optional<double> throughput_gain(double baseline, double xartrek);

/// Policy by x-value matrix for one experiment and metric.
struct Matrix {
    std::string experiment;
    std::string metric;
    std::string x_name;
    std::vector<std::string> columns;
    std::vector<std::string> rows;
    std::vector<std::vector<std::optional<double>>> cells;
};

/// Builds matrices from metrics CSVs (mean completion per scenario and
/// policy) and summary CSVs (completion and throughput). `metric` filters by
/// name when non-empty.
[[nodiscard]] std::vector<Matrix> build_report(const std::vector<std::filesystem::path>& inputs,
                                               const std::string& metric = {});
void write_matrix_csv(std::ostream& out, const Matrix& m);

} // namespace xartrek::exp
