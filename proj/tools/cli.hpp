#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "report.hpp"

namespace repeaterlab::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitGuard = 3,
};

/// Runs one invocation; `args` excludes the program name. Reads
/// REPEATERLAB_SEED for the default simulation seed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Rows of the reference-number comparison, computed from the built-in
/// defaults. The last row is the annotation-only comparison protocol.
std::vector<Record> reproduce_paper_records();

inline constexpr double kReproduceTolerance = 0.02;
inline constexpr const char* kNotComputedLabel = "reference value, not computed";

}  // namespace repeaterlab::cli
