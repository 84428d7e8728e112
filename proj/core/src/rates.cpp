#include "repeaterlab/rates.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace repeaterlab::rates {
namespace {

void require_valid(const ProtocolParams& params) {
  const ValidationResult check = validate(params);
  if (!check.ok()) throw std::invalid_argument(check.summary());
}

void require_positive(double p, const char* what) {
  if (!(p > 0.0)) {
    throw std::domain_error(std::string(what) + " is zero; the chain never completes");
  }
}

}  // namespace

double fiber_transmission(double l0_km, double l_att_km) {
  if (!(l_att_km > 0.0)) throw std::invalid_argument("attenuation length must be positive");
  if (!(l0_km >= 0.0)) throw std::invalid_argument("link length must be nonnegative");
  return std::exp(-l0_km / (2.0 * l_att_km));
}

double p_local(const ProtocolParams& params) {
  require_valid(params);
  const double amp = params.eta_p * params.eta_s * params.eta_e1 * params.eta_d;
  return amp * amp / 2.0;
}

double t_local(const ProtocolParams& params) {
  const double p = p_local(params);
  require_positive(p, "local success probability");
  return 1.0 / (params.r_hz * p);
}

double p_link(const ProtocolParams& params) {
  require_valid(params);
  const double amp = params.eta_e2 * params.eta_d *
                     fiber_transmission(params.l0_km(), params.l_att_km);
  return amp * amp / 2.0;
}

double p_swap(const ProtocolParams& params) {
  require_valid(params);
  const double amp = params.eta_e2 * params.eta_d;
  return amp * amp / 2.0;
}

RateReport t_total(const ProtocolParams& params) {
  RateReport r;
  r.eta_t = fiber_transmission(params.l0_km(), params.l_att_km);
  r.p_l = p_local(params);
  r.p_0 = p_link(params);
  r.p_swap = p_swap(params);
  require_positive(r.p_0, "link success probability");
  require_positive(r.p_swap, "swap success probability");
  r.t_l = t_local(params);
  r.t_0 = params.l0_km() / params.c_km_s + r.t_l;
  r.t_total = r.t_0 / (r.p_0 * std::pow(r.p_swap, params.n));
  r.delta_f = delta_f(params.n, params.p_d);
  return r;
}

double delta_f(int n, double p_d) {
  if (n < 0) throw std::invalid_argument("n must be nonnegative");
  if (!(p_d >= 0.0 && p_d < 1.0)) throw std::invalid_argument("p_d must lie in [0, 1)");
  return std::ldexp(p_d, n + 1);
}

double balance_rate(const ProtocolParams& params) {
  const double p = p_local(params);
  require_positive(p, "local success probability");
  return params.c_km_s / (params.l0_km() * p);
}

OptimalLinks optimal_n(const ProtocolParams& params, int n_min, int n_max) {
  if (n_min < 0 || n_min > n_max) throw std::invalid_argument("empty range of n");
  ProtocolParams trial = params;
  trial.n = n_min;
  OptimalLinks best{n_min, t_total(trial)};
  for (int n = n_min + 1; n <= n_max; ++n) {
    trial.n = n;
    RateReport report = t_total(trial);
    if (report.t_total < best.report.t_total) best = {n, report};
  }
  return best;
}

}  // namespace repeaterlab::rates
