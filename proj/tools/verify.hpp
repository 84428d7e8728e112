#pragma once

#include <optional>
#include <string>
#include <vector>

namespace repeaterlab::cli {

struct Check {
  std::string name;
  double value;      // measured deviation; passes when value <= tolerance
  double tolerance;
  bool pass;
};

/// State-level verification of the heralding pipelines over a phases x
/// phases grid. `tolerance`, when set, replaces every per-check default.
std::vector<Check> run_bsm_checks(int phases, std::optional<double> tolerance);

}  // namespace repeaterlab::cli
