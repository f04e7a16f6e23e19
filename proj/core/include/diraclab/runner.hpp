#pragma once

// Executes a RunConfig: computes, then writes manifest, CSV series and report
// into the configured output directory and nowhere else.

#include <iosfwd>
#include <string>
#include <vector>

#include "diraclab/analysis.hpp"
#include "diraclab/config.hpp"

namespace diraclab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCheckFailed = 3;

/// Runs the experiment without touching the filesystem.
ExperimentReport execute(const RunConfig& config);

/// Manifest JSON: version, canonical config, key sources, overridden file
/// values, seeds and the files written.
std::string manifest_json(const RunConfig& config, const std::vector<std::string>& files);

/// execute() plus all artifacts. Returns kExitCheckFailed when config.check
/// is set and any check failed, kExitOk otherwise. A one-line summary per
/// check goes to log. Errors propagate as exceptions.
int run(const RunConfig& config, std::ostream& log);

}  // namespace diraclab
