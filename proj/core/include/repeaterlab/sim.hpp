#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "repeaterlab/params.hpp"

// Discrete-event Monte Carlo of a repeater chain with 2^n elementary links.
//
// An elementary link needs a local pair at both ends. Each end attempts
// local preparation once per source period and succeeds with p_local; the
// link attempt launches when both ends are ready, spends one link delay and
// succeeds with p_link, otherwise both pairs are prepared again. A swap at
// level i fires as soon as its two level-(i-1) children exist; on failure
// every elementary link below it is regenerated in parallel.

namespace repeaterlab::sim {

enum class SwapComm { off, on };

struct SimPolicy {
  SwapComm swap_comm = SwapComm::off;  // add L_{i-1}/c per swap attempt
  bool parallel_links = true;          // the only supported scheduling
};

/// Stage probabilities and delays driving the simulation. Derived from
/// ProtocolParams through the closed-form probabilities, or set directly.
struct StageModel {
  double p_local = 1.0;
  double p_link = 1.0;
  double p_swap = 1.0;
  double prep_interval_s = 1.0;  // 1/r
  double link_delay_s = 0.0;     // L0/c
  int n = 0;

  static StageModel from_params(const ProtocolParams& params);

  /// Classical confirmation delay of one level-`level` swap, L_{level-1}/c.
  double swap_delay_s(int level, const SimPolicy& policy) const;
};

/// Raised when a stage can never succeed.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Attempt totals of one trial. Local preparation counts source periods
/// spent preparing, summed over elementary links. Counts beyond 2^53 are
/// approximate, hence doubles.
struct StageCounts {
  double local_prep = 0.0;
  double link = 0.0;
  std::vector<std::uint64_t> swap;  // index i-1 for level i

  friend bool operator==(const StageCounts&, const StageCounts&) = default;
};

struct TrialResult {
  double total_time = 0.0;
  StageCounts counts;
  std::uint64_t seed = 0;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Link availability per level and the event clock.
struct ChainState {
  std::vector<std::vector<bool>> links;  // links[level][segment]
  double clock = 0.0;

  explicit ChainState(int n);
  bool complete() const;
};

struct TraceEvent {
  enum class Kind { link_ready, swap_success, swap_failure };
  Kind kind;
  int level;
  std::size_t segment;
  double time;
};

using TraceFn = std::function<void(const TraceEvent&, const ChainState&)>;

/// Per-trial substream seed: a splitmix64 hash of (seed, index).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// Mean and variance, in source periods, of the time until both ends of a
/// link hold a local pair: the max of two geometric variables.
struct PrepMoments {
  double mean;
  double variance;
};
PrepMoments prep_moments(double p_local);

/// One end-to-end distribution. Deterministic in (model, policy, seed).
/// Throws SimulationError if a stage probability is not positive.
TrialResult simulate_trial(const StageModel& model, const SimPolicy& policy,
                           std::uint64_t seed, const TraceFn& trace = {});
TrialResult simulate_trial(const ProtocolParams& params, const SimPolicy& policy,
                           std::uint64_t seed);

struct Estimate {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double std_error = 0.0;
  bool std_error_defined = false;  // false for a single trial
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  StageCounts totals;
};

struct EstimateOptions {
  unsigned threads = 0;  // 0 picks the hardware concurrency
};

/// Aggregates `trials` trials; trial i runs on substream_seed(seed, i).
/// The result does not depend on the thread count.
Estimate estimate(const StageModel& model, const SimPolicy& policy,
                  std::size_t trials, std::uint64_t seed,
                  EstimateOptions options = {});
Estimate estimate(const ProtocolParams& params, const SimPolicy& policy,
                  std::size_t trials, std::uint64_t seed,
                  EstimateOptions options = {});

struct Comparison {
  Estimate mc;
  double analytic = 0.0;  // (L0/c + 1/(r p_local)) / (p_link p_swap^n)
  double ratio = 0.0;
  double ratio_std_error = 0.0;
};

double analytic_total_time(const StageModel& model);

Comparison compare_analytic(const StageModel& model, const SimPolicy& policy,
                            std::size_t trials, std::uint64_t seed,
                            EstimateOptions options = {});
Comparison compare_analytic(const ProtocolParams& params, const SimPolicy& policy,
                            std::size_t trials, std::uint64_t seed,
                            EstimateOptions options = {});

/// Expected total time for n <= 1 with swap_comm off, from a Markov analysis
/// of local preparation and a renewal argument over link and swap attempts.
/// Throws std::invalid_argument outside that domain.
double exact_expected_time_small(const StageModel& model, const SimPolicy& policy);
double exact_expected_time_small(const ProtocolParams& params, const SimPolicy& policy);

}  // namespace repeaterlab::sim
