#pragma once

#include "repeaterlab/params.hpp"

// Closed-form success probabilities and waiting times of the repeater chain.
// All functions are pure.

namespace repeaterlab::rates {

/// exp(-l0 / (2 l_att)): transmission from a node to the link midpoint.
/// Throws std::invalid_argument for l0 < 0 or l_att <= 0.
double fiber_transmission(double l0_km, double l_att_km);

/// Local entanglement heralding probability (eta_p eta_s eta_e1 eta_d)^2 / 2.
double p_local(const ProtocolParams& params);

/// Mean local preparation time 1/(r p_local). Throws std::domain_error when
/// p_local is zero.
double t_local(const ProtocolParams& params);

/// Elementary link heralding probability (eta_e2 eta_d eta_t)^2 / 2 at L0.
double p_link(const ProtocolParams& params);

/// Swap heralding probability (eta_e2 eta_d)^2 / 2, the same at every level.
double p_swap(const ProtocolParams& params);

/// Full report with t_total = (L0/c + t_local) / (p_link p_swap^n). Throws
/// std::domain_error if any stage probability is zero.
RateReport t_total(const ProtocolParams& params);

/// 2^(n+1) p_d. Throws std::invalid_argument for n < 0 or p_d outside [0, 1).
double delta_f(int n, double p_d);

/// Repetition rate c / (L0 p_local) at which t_local equals L0/c.
double balance_rate(const ProtocolParams& params);

struct OptimalLinks {
  int n;
  RateReport report;
};

/// Minimizes t_total over n in [n_min, n_max]; ties go to the smaller n.
/// Throws std::invalid_argument for an empty or negative range.
OptimalLinks optimal_n(const ProtocolParams& params, int n_min, int n_max);

}  // namespace repeaterlab::rates
