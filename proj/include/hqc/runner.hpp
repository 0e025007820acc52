#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hqc/config.hpp"

namespace hqc {

inline constexpr int kExitClean = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitViolation = 2;

struct RunOutcome {
  int exit_code = kExitClean;
  std::vector<Diagnostics> ticks;
  std::optional<ViolationReport> violation;
  std::optional<DeltaLimitTable> study;
  std::vector<std::filesystem::path> files;  // written, in order
};

/// Runs the configured mode and writes its artifacts. Numerical breakdown
/// and I/O problems propagate as exceptions; see run() for the exit-code
/// wrapper.
RunOutcome execute(const RunConfig& cfg, std::ostream& log);

/// execute() with the exit-code contract: 0 clean, 2 positivity violation
/// found in evolve mode, 1 on breakdown or I/O failure (reported to log).
int run(const RunConfig& cfg, std::ostream& log);

/// Resolved scenario, stability bounds with the binding constraint, memory
/// and step estimates, and the planned study jobs.
std::string describe(const RunConfig& cfg);

/// Applies HQC_THREADS (positive integer) to the OpenMP runtime, if set.
/// Returns the thread count in effect.
int apply_thread_override();

}  // namespace hqc
