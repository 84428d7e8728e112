#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "repeaterlab/fock.hpp"
#include "repeaterlab/optics.hpp"
#include "repeaterlab/rates.hpp"

namespace repeaterlab::cli {
namespace {

using fock::Arm;
using fock::ModeRegistry;
using fock::PureState;
using fock::WeightedEnsemble;

ProtocolParams ideal_params() {
  ProtocolParams p = paper_defaults();
  p.eta_p = p.eta_s = p.eta_e1 = p.eta_e2 = p.eta_d = 1.0;
  return p;
}

double relative(double a, double b) { return std::abs(a - b) / std::abs(b); }

double accepted(const std::vector<optics::BsmBranch>& branches) {
  double total = 0.0;
  for (const auto& b : branches) {
    if (optics::classify(b.pattern) != optics::BsmOutcome::reject) total += b.probability;
  }
  return total;
}

// Accept probability of the local heralding stage for a two-site T-memory
// basis state with the given occupations (L_u, L_d, R_u, R_d).
double local_accept(std::initializer_list<std::uint8_t> occupation) {
  PureState s(ModeRegistry({optics::t_mode("L", Arm::u), optics::t_mode("L", Arm::d),
                            optics::t_mode("R", Arm::u), optics::t_mode("R", Arm::d)}));
  s.add(fock::Occupation(occupation), 1.0);
  return optics::herald_local(WeightedEnsemble(s), 1.0, 1.0).accept_prob;
}

double psi_accept(double sign) {
  const auto modes = optics::BsmNetwork::input_modes("a", "b");
  PureState s{ModeRegistry({modes.begin(), modes.end()})};
  const double h = std::numbers::sqrt2 / 2.0;
  s.add({1, 0, 0, 1}, h);
  s.add({0, 1, 1, 0}, sign * h);
  return accepted(optics::apply_bsm(WeightedEnsemble(s), 1.0, 0.0));
}

}  // namespace

std::vector<Check> run_bsm_checks(int phases, std::optional<double> tolerance) {
  if (phases < 1) throw std::invalid_argument("phases must be at least 1");
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double fallback) {
    const double tol = tolerance.value_or(fallback);
    checks.push_back({std::move(name), value, tol, value <= tol});
  };

  const Eigen::Matrix4cd u = optics::BsmNetwork::matrix();
  add("unitarity", (u.adjoint() * u - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff(),
      1e-10);

  const ProtocolParams defaults = paper_defaults();
  const double reference =
      optics::local_entanglement_pipeline(defaults, {0.0}, {0.0}).accept_prob;
  double phase_spread = 0.0;
  double phase_infidelity = 0.0;
  for (int i = 0; i < phases; ++i) {
    for (int j = 0; j < phases; ++j) {
      const double phi_l = 2.0 * std::numbers::pi * i / phases;
      const double phi_r = 2.0 * std::numbers::pi * j / phases;
      const auto report = optics::local_entanglement_pipeline(defaults, {phi_l}, {phi_r});
      phase_spread = std::max(phase_spread, relative(report.accept_prob, reference));
      phase_infidelity = std::max(phase_infidelity, 1.0 - report.min_fidelity());
    }
  }
  add("phase_independence", phase_spread, 1e-10);
  add("local_fidelity", phase_infidelity, 1e-9);

  const double spurious = local_accept({0, 0, 0, 0}) + local_accept({1, 0, 0, 0}) +
                          local_accept({0, 1, 0, 0}) + local_accept({0, 0, 1, 0}) +
                          local_accept({0, 0, 0, 1}) + local_accept({1, 0, 0, 1}) +
                          local_accept({0, 1, 1, 0});
  add("filtering", spurious, 1e-12);
  add("psi_rejection", psi_accept(1.0) + psi_accept(-1.0), 1e-12);

  const auto local = optics::local_entanglement_pipeline(defaults, {0.0}, {0.0});
  const auto link = optics::link_pipeline(defaults);
  const auto swap = optics::swap_pipeline(defaults);
  add("engine_formula_local", relative(local.accept_prob, rates::p_local(defaults)), 1e-9);
  add("engine_formula_link", relative(link.accept_prob, rates::p_link(defaults)), 1e-9);
  add("engine_formula_swap", relative(swap.accept_prob, rates::p_swap(defaults)), 1e-9);

  const ProtocolParams ideal = ideal_params();
  ProtocolParams ideal_fiber = ideal;
  ideal_fiber.l_att_km = 1e300;  // transmission rounds to exactly 1
  const auto ideal_local = optics::local_entanglement_pipeline(ideal, {0.0}, {0.0});
  const auto ideal_link = optics::link_pipeline(ideal_fiber);
  const auto ideal_swap = optics::swap_pipeline(ideal);
  add("ideal_accept_local", std::abs(ideal_local.accept_prob - 0.5), 1e-10);
  add("ideal_accept_link", std::abs(ideal_link.accept_prob - 0.5), 1e-10);
  add("ideal_accept_swap", std::abs(ideal_swap.accept_prob - 0.5), 1e-10);
  add("link_fidelity", 1.0 - link.min_fidelity(), 1e-9);
  add("swap_fidelity", 1.0 - swap.min_fidelity(), 1e-9);

  double residual = 0.0;
  for (int atoms = 1; atoms <= 3; ++atoms) {
    for (int k = 0; k < 8; ++k) {
      const double g = 0.1 + 0.4 * k;
      const double omega = 2.3 - 0.25 * k;
      residual = std::max(residual, fock::dark_state_residual(g, omega, atoms));
    }
  }
  add("dark_state_residual", residual, 1e-12);
  return checks;
}

}  // namespace repeaterlab::cli
