#include "repeaterlab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <queue>
#include <random>
#include <span>
#include <thread>

#include "repeaterlab/rates.hpp"

namespace repeaterlab::sim {
namespace {

constexpr int kMaxLevels = 30;
// Above this many link attempts the local-preparation time of one link is
// drawn from its normal limit instead of attempt by attempt.
constexpr double kExactAttemptLimit = 64.0;

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return std::ldexp(static_cast<double>(engine_() >> 11), -53); }

  /// Number of Bernoulli(p) trials up to and including the first success.
  double geometric(double p) {
    if (p >= 1.0) return 1.0;
    const double u = 1.0 - uniform();
    return 1.0 + std::floor(std::log(u) / std::log1p(-p));
  }

  /// max of two independent geometric(p) variables, by inversion of
  /// P(M <= k) = (1 - q^k)^2.
  double max_of_two_geometric(double p) {
    if (p >= 1.0) return 1.0;
    const double v = uniform();
    const double k = std::ceil(std::log1p(-std::sqrt(v)) / std::log1p(-p));
    return std::max(1.0, k);
  }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

struct LinkDraw {
  double attempts;
  double prep_periods;
  double duration;
};

LinkDraw draw_link(const StageModel& model, const PrepMoments& prep, Stream& rng) {
  LinkDraw draw{};
  draw.attempts = rng.geometric(model.p_link);
  if (draw.attempts <= kExactAttemptLimit) {
    for (double j = 0; j < draw.attempts; ++j) {
      draw.prep_periods += rng.max_of_two_geometric(model.p_local);
    }
  } else {
    const double spread = std::sqrt(draw.attempts * prep.variance);
    draw.prep_periods = std::max(draw.attempts,
                                 draw.attempts * prep.mean + spread * rng.normal());
  }
  draw.duration = draw.prep_periods * model.prep_interval_s +
                  draw.attempts * model.link_delay_s;
  return draw;
}

void check_model(const StageModel& m) {
  auto probability = [](double p, const char* what) {
    if (!(p > 0.0)) {
      throw SimulationError(std::string(what) + " must be positive for the chain to finish");
    }
    if (p > 1.0) throw std::invalid_argument(std::string(what) + " exceeds 1");
  };
  if (m.n < 0 || m.n > kMaxLevels) throw std::invalid_argument("n out of range");
  probability(m.p_local, "local success probability");
  probability(m.p_link, "link success probability");
  if (m.n > 0) probability(m.p_swap, "swap success probability");
  if (!(m.prep_interval_s > 0.0) || !std::isfinite(m.prep_interval_s)) {
    throw std::invalid_argument("preparation interval must be positive");
  }
  if (!(m.link_delay_s >= 0.0) || !std::isfinite(m.link_delay_s)) {
    throw std::invalid_argument("link delay must be nonnegative");
  }
}

struct Event {
  double time;
  int level;
  std::size_t segment;

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (level != o.level) return level > o.level;
    return segment > o.segment;
  }
};

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace

StageModel StageModel::from_params(const ProtocolParams& params) {
  StageModel m;
  m.p_local = rates::p_local(params);
  m.p_link = rates::p_link(params);
  m.p_swap = rates::p_swap(params);
  m.prep_interval_s = 1.0 / params.r_hz;
  m.link_delay_s = params.l0_km() / params.c_km_s;
  m.n = params.n;
  return m;
}

double StageModel::swap_delay_s(int level, const SimPolicy& policy) const {
  if (policy.swap_comm == SwapComm::off) return 0.0;
  return std::ldexp(link_delay_s, level - 1);
}

ChainState::ChainState(int n) {
  for (int level = 0; level <= n; ++level) {
    links.emplace_back(std::size_t{1} << (n - level), false);
  }
}

bool ChainState::complete() const { return links.back().front(); }

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ index);
}

PrepMoments prep_moments(double p_local) {
  if (p_local >= 1.0) return {1.0, 0.0};
  const double q = 1.0 - p_local;
  const double q2 = q * q;
  // P(M > k) = 2 q^k - q^2k.
  const double mean = 2.0 / p_local - 1.0 / (1.0 - q2);
  const double second = 2.0 * (1.0 + q) / (p_local * p_local) -
                        (1.0 + q2) / ((1.0 - q2) * (1.0 - q2));
  return {mean, std::max(0.0, second - mean * mean)};
}

TrialResult simulate_trial(const StageModel& model, const SimPolicy& policy,
                           std::uint64_t seed, const TraceFn& trace) {
  check_model(model);
  Stream rng(seed);
  const PrepMoments prep = prep_moments(model.p_local);

  TrialResult result;
  result.seed = seed;
  result.counts.swap.assign(static_cast<std::size_t>(model.n), 0);
  ChainState state(model.n);

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  auto launch_leaves = [&](double start, std::size_t first, std::size_t count) {
    for (std::size_t leaf = first; leaf < first + count; ++leaf) {
      const LinkDraw draw = draw_link(model, prep, rng);
      result.counts.link += draw.attempts;
      result.counts.local_prep += draw.prep_periods;
      queue.push({start + draw.duration, 0, leaf});
    }
  };
  launch_leaves(0.0, 0, state.links.front().size());

  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    state.clock = ev.time;
    state.links[ev.level][ev.segment] = true;
    if (trace) trace({TraceEvent::Kind::link_ready, ev.level, ev.segment, ev.time}, state);
    if (ev.level == model.n) break;

    const std::size_t sibling = ev.segment ^ 1U;
    if (!state.links[ev.level][sibling]) continue;

    const int parent_level = ev.level + 1;
    const std::size_t parent = ev.segment >> 1;
    ++result.counts.swap[ev.level];
    state.links[ev.level][ev.segment] = false;
    state.links[ev.level][sibling] = false;
    const double done = ev.time + model.swap_delay_s(parent_level, policy);
    if (rng.uniform() < model.p_swap) {
      if (trace) {
        trace({TraceEvent::Kind::swap_success, parent_level, parent, ev.time}, state);
      }
      queue.push({done, parent_level, parent});
    } else {
      if (trace) {
        trace({TraceEvent::Kind::swap_failure, parent_level, parent, ev.time}, state);
      }
      const std::size_t width = std::size_t{1} << parent_level;
      launch_leaves(done, parent * width, width);
    }
  }
  result.total_time = state.clock;
  return result;
}

TrialResult simulate_trial(const ProtocolParams& params, const SimPolicy& policy,
                           std::uint64_t seed) {
  return simulate_trial(StageModel::from_params(params), policy, seed);
}

Estimate estimate(const StageModel& model, const SimPolicy& policy,
                  std::size_t trials, std::uint64_t seed, EstimateOptions options) {
  if (trials == 0) throw std::invalid_argument("trials must be at least 1");
  check_model(model);

  std::vector<TrialResult> results(trials);
  unsigned threads = options.threads != 0 ? options.threads
                                          : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, trials));
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      results[i] = simulate_trial(model, policy, substream_seed(seed, i));
    }
  };
  if (threads <= 1) {
    run_range(0, trials);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (trials + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(trials, t * chunk);
      const std::size_t end = std::min(trials, begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          run_range(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Estimate est;
  est.trials = trials;
  est.seed = seed;
  std::vector<double> times(trials);
  std::vector<double> prep(trials);
  std::vector<double> links(trials);
  est.totals.swap.assign(static_cast<std::size_t>(model.n), 0);
  for (std::size_t i = 0; i < trials; ++i) {
    times[i] = results[i].total_time;
    prep[i] = results[i].counts.local_prep;
    links[i] = results[i].counts.link;
    for (std::size_t l = 0; l < est.totals.swap.size(); ++l) {
      est.totals.swap[l] += results[i].counts.swap[l];
    }
  }
  est.totals.local_prep = pairwise_sum(prep);
  est.totals.link = pairwise_sum(links);
  est.mean = pairwise_sum(times) / static_cast<double>(trials);
  if (trials > 1) {
    std::vector<double> sq(trials);
    for (std::size_t i = 0; i < trials; ++i) {
      const double d = times[i] - est.mean;
      sq[i] = d * d;
    }
    const double variance = pairwise_sum(sq) / static_cast<double>(trials - 1);
    est.std_error = std::sqrt(variance / static_cast<double>(trials));
    est.std_error_defined = true;
  }
  std::sort(times.begin(), times.end());
  est.p50 = nearest_rank(times, 0.50);
  est.p90 = nearest_rank(times, 0.90);
  est.p99 = nearest_rank(times, 0.99);
  return est;
}

Estimate estimate(const ProtocolParams& params, const SimPolicy& policy,
                  std::size_t trials, std::uint64_t seed, EstimateOptions options) {
  return estimate(StageModel::from_params(params), policy, trials, seed, options);
}

double analytic_total_time(const StageModel& model) {
  const double t0 = model.link_delay_s + model.prep_interval_s / model.p_local;
  return t0 / (model.p_link * std::pow(model.p_swap, model.n));
}

Comparison compare_analytic(const StageModel& model, const SimPolicy& policy,
                            std::size_t trials, std::uint64_t seed,
                            EstimateOptions options) {
  Comparison c;
  c.mc = estimate(model, policy, trials, seed, options);
  c.analytic = analytic_total_time(model);
  c.ratio = c.mc.mean / c.analytic;
  c.ratio_std_error = c.mc.std_error / c.analytic;
  return c;
}

Comparison compare_analytic(const ProtocolParams& params, const SimPolicy& policy,
                            std::size_t trials, std::uint64_t seed,
                            EstimateOptions options) {
  return compare_analytic(StageModel::from_params(params), policy, trials, seed, options);
}

}  // namespace repeaterlab::sim
