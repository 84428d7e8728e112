#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "repeaterlab/rates.hpp"
#include "repeaterlab/sim.hpp"

namespace repeaterlab::sim {
namespace {

struct PrepChain {
  double mean;      // periods until both ends are ready
  double variance;
};

// Transient states: neither end ready, only the left ready, only the right
// ready. Every period each unready end succeeds independently with p.
PrepChain solve_prep_chain(double p) {
  const double q = 1.0 - p;
  Eigen::Matrix3d transient;
  transient << q * q, p * q, q * p,
               0.0,   q,     0.0,
               0.0,   0.0,   q;
  const Eigen::Matrix3d fundamental = Eigen::Matrix3d::Identity() - transient;
  const Eigen::Vector3d ones = Eigen::Vector3d::Ones();
  const Eigen::Vector3d first = fundamental.fullPivLu().solve(ones);
  const Eigen::Vector3d second =
      fundamental.fullPivLu().solve(ones + 2.0 * transient * first);
  return {first(0), second(0) - first(0) * first(0)};
}

// E[sqrt(m)] for m geometric on {1, 2, ...} with success probability s.
double mean_sqrt_geometric(double s) {
  if (s >= 1.0) return 1.0;
  if (s < 1e-4) {
    const double rate = -std::log1p(-s);
    return std::sqrt(std::numbers::pi / rate) / 2.0;
  }
  double sum = 0.0;
  double mass = s;
  for (double m = 1.0; mass > 1e-18 * s; m += 1.0) {
    sum += std::sqrt(m) * mass;
    mass *= 1.0 - s;
  }
  return sum;
}

}  // namespace

double exact_expected_time_small(const StageModel& model, const SimPolicy& policy) {
  if (model.n > 1) throw std::invalid_argument("oracle supports n <= 1 only");
  if (model.n < 0) throw std::invalid_argument("n must be nonnegative");
  if (policy.swap_comm != SwapComm::off) {
    throw std::invalid_argument("oracle requires swap_comm off");
  }
  if (!(model.p_local > 0.0 && model.p_link > 0.0 && (model.n == 0 || model.p_swap > 0.0))) {
    throw std::invalid_argument("oracle requires positive stage probabilities");
  }

  const double tau = model.prep_interval_s;
  const PrepChain prep = model.p_local >= 1.0 ? PrepChain{1.0, 0.0}
                                              : solve_prep_chain(model.p_local);
  // Each link attempt costs a preparation round plus the link delay and
  // succeeds with p_link independently, so the link time is a geometric sum.
  const double attempt = prep.mean * tau + model.link_delay_s;
  const double link_time = attempt / model.p_link;
  if (model.n == 0) return link_time;

  // Two links race; the swap waits for the slower. With K, K' the attempt
  // counts and m = min(K, K'):
  //   E max = E X (3 - t)/2 + (t/2) A + (1 - t) B,  t = P(K = K'),
  // where A = E|D_m| and B = E(D_m - X'')^+ for D_m the difference of two
  // independent m-round preparation sums and X'' a fresh link time.
  const double p0 = model.p_link;
  const double tie = p0 / (2.0 - p0);
  const double min_rate = p0 * (2.0 - p0);
  double spread_term = 0.0;
  double overshoot_term = 0.0;
  if (prep.variance > 0.0) {
    const double sigma = std::sqrt(2.0 * prep.variance) * tau;  // per round of D
    spread_term = std::sqrt(2.0 / std::numbers::pi) * sigma * mean_sqrt_geometric(min_rate);
    const double mean_var = sigma * sigma / min_rate;
    overshoot_term = mean_var / (4.0 * link_time);
  }
  const double slower = link_time * (3.0 - tie) / 2.0 + tie * spread_term / 2.0 +
                        (1.0 - tie) * overshoot_term;
  return slower / model.p_swap;
}

double exact_expected_time_small(const ProtocolParams& params, const SimPolicy& policy) {
  return exact_expected_time_small(StageModel::from_params(params), policy);
}

}  // namespace repeaterlab::sim
