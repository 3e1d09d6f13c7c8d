#pragma once

// Reference data: the evaluation platform, the five benchmark profiles and
// the BFS measurements, plus the threshold table measured on hardware.
// Kernel areas are illustrative; all five kernels fit one image.

#include "xartrek/platform.hpp"
#include "xartrek/threshold.hpp"

#include <vector>

namespace xartrek::builtin {

/// 6 x86 cores, 96 ARM cores, capacity 100, 400 ms reconfiguration.
[[nodiscard]] PlatformSpec platform();

/// CG_A, FaceDet320, FaceDet640, Digit500, Digit2000 (one call per run).
[[nodiscard]] std::vector<FunctionProfile> benchmark_profiles();

/// Multi-image face detection: FaceDet320 timings, 1000 calls per run.
[[nodiscard]] FunctionProfile facedet_multi_profile();

/// benchmark_profiles() followed by facedet_multi_profile().
[[nodiscard]] std::vector<FunctionProfile> all_profiles();

/// BFS on 1000..5000-node graphs; never measured on ARM.
[[nodiscard]] std::vector<FunctionProfile> bfs_profiles();

/// Thresholds as measured on the evaluation hardware (last_* left at 0).
[[nodiscard]] ThresholdTable hardware_thresholds();

} // namespace xartrek::builtin
