#include "repeaterlab/optics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "repeaterlab/rates.hpp"

namespace repeaterlab::optics {
namespace {

using fock::Arm;
using fock::Branch;
using fock::Complex;
using fock::Excitation;
using fock::ModeRegistry;
using fock::Polarization;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kPhaseGrid = 256;

double wrap_pi(double x) {
  x = std::remainder(x, kTwoPi);
  return x <= -std::numbers::pi ? x + kTwoPi : x;
}

// F(x) = sum_b w_b |sum_k c_bk e^{i k x}|^2, the fidelity after a phase
// exp(i x n) on the correction mode.
class PhaseProfile {
 public:
  PhaseProfile(const WeightedEnsemble& memory, const PureState& target,
               const ModeId& mode) {
    const std::size_t idx = target.registry().index_of(mode);
    for (const Branch& b : memory.branches()) {
      std::vector<Complex> coeffs;
      for (const auto& [occ, amp] : b.state.terms()) {
        const Complex t = target.amplitude(occ);
        if (t == Complex{}) continue;
        const std::size_t k = occ[idx];
        if (coeffs.size() <= k) coeffs.resize(k + 1);
        coeffs[k] += std::conj(t) * amp;
      }
      weights_.push_back(b.weight);
      coeffs_.push_back(std::move(coeffs));
    }
  }

  double operator()(double x) const {
    double sum = 0.0;
    for (std::size_t b = 0; b < weights_.size(); ++b) {
      Complex overlap{};
      for (std::size_t k = 0; k < coeffs_[b].size(); ++k) {
        overlap += coeffs_[b][k] * std::polar(1.0, x * static_cast<double>(k));
      }
      sum += weights_[b] * std::norm(overlap);
    }
    return sum;
  }

 private:
  std::vector<double> weights_;
  std::vector<std::vector<Complex>> coeffs_;
};

double golden_section_max(const PhaseProfile& f, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int iter = 0; iter < 200 && (b - a) > 1e-15; ++iter) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

PureState matching_registry(const PureState& target, const ModeRegistry& registry) {
  if (target.registry() == registry) return target;
  return fock::reorder(target, registry);
}

PipelineReport build_report(std::string stage, const std::vector<BsmBranch>& bsm,
                            const PureState& target, const ModeId& correction_mode) {
  PipelineReport report;
  report.stage = std::move(stage);
  std::ostringstream corrections;
  double weighted = 0.0;
  for (const BsmBranch& branch : bsm) {
    const BsmOutcome outcome = classify(branch.pattern);
    if (outcome == BsmOutcome::reject) continue;
    CorrectedFidelity corrected =
        corrected_fidelity(branch.memory, outcome, target, correction_mode);
    report.accept_prob += branch.probability;
    weighted += branch.probability * corrected.fidelity;
    report.branch_count += branch.memory.size();
    if (!report.heralds.empty()) corrections << ';';
    corrections << branch.pattern.describe() << ':'
                << corrected.correction.describe();
    report.heralds.push_back(
        {branch.pattern, outcome, branch.probability, branch.memory, corrected});
  }
  report.fidelity = report.accept_prob > 0.0 ? weighted / report.accept_prob : 0.0;
  report.correction = corrections.str();
  return report;
}

}  // namespace

double PhaseSetting::reduced() const {
  const double r = std::fmod(phi, kTwoPi);
  return r < 0.0 ? r + kTwoPi : r;
}

int DetectionPattern::total() const {
  int sum = 0;
  for (int c : clicks) sum += c;
  return sum;
}

std::string DetectionPattern::describe() const {
  std::ostringstream out;
  bool first = true;
  for (int i = 0; i < kDetectors; ++i) {
    if (clicks[i] == 0) continue;
    if (!first) out << '&';
    first = false;
    out << 'D' << (i + 1);
    if (clicks[i] > 1) out << 'x' << clicks[i];
  }
  return first ? "none" : out.str();
}

std::string to_string(BsmOutcome outcome) {
  switch (outcome) {
    case BsmOutcome::accept_same:
      return "accept_same";
    case BsmOutcome::accept_cross:
      return "accept_cross";
    case BsmOutcome::reject:
      return "reject";
  }
  return "reject";
}

Eigen::Matrix4cd BsmNetwork::central_pbs() {
  // Rows (c_H, c_V, d_H, d_V); columns (a_H, a_V, b_H, b_V).
  Eigen::Matrix4cd p = Eigen::Matrix4cd::Zero();
  p(0, 0) = 1.0;  // a_H transmitted into c
  p(3, 1) = 1.0;  // a_V reflected into d
  p(2, 2) = 1.0;  // b_H transmitted into d
  p(1, 3) = 1.0;  // b_V reflected into c
  return p;
}

Eigen::Matrix4cd BsmNetwork::analyzers() {
  // |H> = (|+> + |->)/sqrt 2, |V> = (|+> - |->)/sqrt 2 in each arm.
  const double h = std::numbers::sqrt2 / 2.0;
  Eigen::Matrix4cd a = Eigen::Matrix4cd::Zero();
  a(0, 0) = h;
  a(1, 0) = h;
  a(0, 1) = h;
  a(1, 1) = -h;
  a(2, 2) = h;
  a(3, 2) = h;
  a(2, 3) = h;
  a(3, 3) = -h;
  return a;
}

Eigen::Matrix4cd BsmNetwork::matrix() { return analyzers() * central_pbs(); }

std::array<ModeId, 4> BsmNetwork::input_modes(const std::string& path_a,
                                              const std::string& path_b) {
  return {photon_mode(path_a, Arm::u), photon_mode(path_a, Arm::d),
          photon_mode(path_b, Arm::u), photon_mode(path_b, Arm::d)};
}

std::array<ModeId, kDetectors> BsmNetwork::detector_modes() {
  return {ModeId::photon("D1"), ModeId::photon("D2"), ModeId::photon("D3"),
          ModeId::photon("D4")};
}

ModeId source_path(Arm arm) {
  return ModeId::photon(arm == Arm::u ? "u_in" : "d_in");
}

ModeId t_mode(const std::string& site, Arm arm) {
  return ModeId::ensemble(site, arm, Excitation::T);
}

ModeId s_mode(const std::string& site, Arm arm) {
  return ModeId::ensemble(site, arm, Excitation::S);
}

ModeId photon_mode(const std::string& path, Arm arm) {
  return ModeId::photon(path, arm == Arm::u ? Polarization::H : Polarization::V);
}

PureState input_photon_state(PhaseSetting phase) {
  PureState out(ModeRegistry({source_path(Arm::u), source_path(Arm::d)}));
  const double h = std::numbers::sqrt2 / 2.0;
  out.add({1, 0}, h);
  out.add({0, 1}, std::polar(h, phase.phi));
  return out;
}

WeightedEnsemble store_to_memory(const PureState& photon, double eta_p,
                                 double eta_s, const std::string& site) {
  const ModeRegistry expected({source_path(Arm::u), source_path(Arm::d)});
  if (photon.registry() != expected) {
    throw std::invalid_argument("store_to_memory expects the (u_in, d_in) photon state");
  }
  for (const auto& [occ, amp] : photon.terms()) {
    if (occ[0] + occ[1] != 1) {
      throw std::invalid_argument("store_to_memory expects exactly one photon");
    }
  }
  if (!(eta_p >= 0.0 && eta_p <= 1.0 && eta_s >= 0.0 && eta_s <= 1.0)) {
    throw std::invalid_argument("efficiencies must lie in [0, 1]");
  }
  PureState stored = fock::relabel(photon, source_path(Arm::u), t_mode(site, Arm::u));
  stored = fock::relabel(stored, source_path(Arm::d), t_mode(site, Arm::d));
  stored = stored.normalized();
  const double excited = eta_p * eta_s;
  std::vector<Branch> branches;
  branches.push_back({1.0 - excited, fock::vacuum(stored.registry())});
  branches.push_back({excited, std::move(stored)});
  return WeightedEnsemble(std::move(branches));
}

WeightedEnsemble retrieve_t_to_s(const WeightedEnsemble& memory, double eta_e1,
                                 const std::string& site, const std::string& path) {
  WeightedEnsemble converted = memory.map([&](const PureState& s) {
    PureState out = s;
    for (Arm arm : {Arm::u, Arm::d}) {
      const ModeId targets[] = {s_mode(site, arm), photon_mode(path, arm)};
      out = fock::transfer(out, t_mode(site, arm), targets);
    }
    return out;
  });
  return apply_path_loss(converted, path, eta_e1);
}

WeightedEnsemble retrieve_s_to_photon(const WeightedEnsemble& memory,
                                      double eta_e2, const std::string& site,
                                      const std::string& path) {
  WeightedEnsemble converted = memory.map([&](const PureState& s) {
    PureState out = s;
    for (Arm arm : {Arm::u, Arm::d}) {
      out = fock::relabel(out, s_mode(site, arm), photon_mode(path, arm));
    }
    return out;
  });
  return apply_path_loss(converted, path, eta_e2);
}

WeightedEnsemble apply_path_loss(const WeightedEnsemble& ens,
                                 const std::string& path, double eta) {
  WeightedEnsemble out = fock::apply_loss(ens, photon_mode(path, Arm::u), eta);
  return fock::apply_loss(out, photon_mode(path, Arm::d), eta);
}

std::vector<BsmBranch> apply_bsm(const WeightedEnsemble& photons, double eta_d,
                                 double p_d, const std::string& path_a,
                                 const std::string& path_b) {
  if (!(p_d >= 0.0 && p_d < 1.0)) {
    throw std::invalid_argument("dark-count probability must lie in [0, 1)");
  }
  const auto inputs = BsmNetwork::input_modes(path_a, path_b);
  const auto detectors = BsmNetwork::detector_modes();
  const Eigen::MatrixXcd u = BsmNetwork::matrix();

  WeightedEnsemble mapped = photons.map([&](const PureState& s) {
    PureState out = fock::apply_linear_map(s, inputs, u);
    for (int i = 0; i < kDetectors; ++i) out = fock::relabel(out, inputs[i], detectors[i]);
    return out;
  });
  for (const ModeId& d : detectors) mapped = fock::apply_loss(mapped, d, eta_d);

  struct Recorded {
    double probability = 0.0;
    std::vector<Branch> branches;
  };
  std::map<DetectionPattern, Recorded> recorded;
  for (fock::JointOutcome& outcome : fock::measure_numbers(mapped, detectors)) {
    DetectionPattern base;
    std::copy(outcome.counts.begin(), outcome.counts.end(), base.clicks.begin());
    const int masks = p_d > 0.0 ? (1 << kDetectors) : 1;
    for (int mask = 0; mask < masks; ++mask) {
      DetectionPattern pattern = base;
      double p_mask = 1.0;
      for (int i = 0; i < kDetectors; ++i) {
        const bool dark = (mask >> i) & 1;
        p_mask *= dark ? p_d : 1.0 - p_d;
        pattern.clicks[i] += dark ? 1 : 0;
      }
      const double p = outcome.probability * p_mask;
      if (!(p > 0.0)) continue;
      Recorded& slot = recorded[pattern];
      slot.probability += p;
      for (const Branch& b : outcome.conditional.branches()) {
        slot.branches.push_back({p * b.weight, b.state});
      }
    }
  }

  std::vector<BsmBranch> result;
  for (auto& [pattern, slot] : recorded) {
    result.push_back(
        {pattern, slot.probability, WeightedEnsemble(std::move(slot.branches))});
  }
  return result;
}

BsmOutcome classify(const DetectionPattern& pattern) {
  int fired = 0;
  int first = -1;
  int second = -1;
  for (int i = 0; i < kDetectors; ++i) {
    const int c = pattern.clicks[i];
    if (c == 0) continue;
    if (c != 1) return BsmOutcome::reject;
    ++fired;
    (first < 0 ? first : second) = i;
  }
  if (fired != 2) return BsmOutcome::reject;
  // Detector indices 0..3 are D1..D4; D1, D2 sit on arm c and D3, D4 on d.
  if ((first == 0 && second == 2) || (first == 1 && second == 3)) {
    return BsmOutcome::accept_same;
  }
  if ((first == 0 && second == 3) || (first == 1 && second == 2)) {
    return BsmOutcome::accept_cross;
  }
  return BsmOutcome::reject;
}

std::string Correction::describe() const {
  std::ostringstream out;
  out << (z_flip ? "Z" : "I");
  if (phase != 0.0) {
    out.precision(6);
    out << "+phase(" << phase << ")";
  }
  return out.str();
}

CorrectedFidelity corrected_fidelity(const WeightedEnsemble& memory,
                                     BsmOutcome outcome, const PureState& target,
                                     const ModeId& correction_mode) {
  if (outcome == BsmOutcome::reject) {
    throw std::invalid_argument("corrected_fidelity needs an accepted outcome");
  }
  const PureState aligned = matching_registry(target, memory.registry());
  const PhaseProfile profile(memory, aligned, correction_mode);

  double best_x = 0.0;
  double best_f = profile(0.0);
  for (int i = 1; i < kPhaseGrid; ++i) {
    const double x = kTwoPi * i / kPhaseGrid;
    const double f = profile(x);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  const double step = kTwoPi / kPhaseGrid;
  const double refined = golden_section_max(profile, best_x - step, best_x + step);
  const double refined_f = profile(refined);
  if (refined_f > best_f) {
    best_f = refined_f;
    best_x = refined;
  }

  CorrectedFidelity result;
  result.fidelity = best_f;
  const double x = wrap_pi(best_x);
  result.correction.z_flip = std::abs(x) > std::numbers::pi / 2.0;
  result.correction.phase =
      result.correction.z_flip ? wrap_pi(x - std::numbers::pi) : x;
  if (std::abs(result.correction.phase) < 1e-9) result.correction.phase = 0.0;
  return result;
}

PureState ensemble_qubit_state(const std::string& site, PhaseSetting phase) {
  PureState out(ModeRegistry({t_mode(site, Arm::u), t_mode(site, Arm::d)}));
  const double h = std::numbers::sqrt2 / 2.0;
  out.add({1, 0}, h);
  out.add({0, 1}, std::polar(h, phase.phi));
  return out;
}

PureState pme_state(const std::string& site1, const std::string& site2) {
  PureState out(ModeRegistry({s_mode(site1, Arm::u), s_mode(site1, Arm::d),
                              s_mode(site2, Arm::u), s_mode(site2, Arm::d)}));
  const double h = std::numbers::sqrt2 / 2.0;
  out.add({1, 0, 1, 0}, h);
  out.add({0, 1, 0, 1}, h);
  return out;
}

double PipelineReport::min_fidelity() const {
  double lowest = 1.0;
  for (const HeraldedState& h : heralds) {
    lowest = std::min(lowest, h.corrected.fidelity);
  }
  return heralds.empty() ? 0.0 : lowest;
}

PipelineReport herald_local(const WeightedEnsemble& t_memory, double eta_e1,
                            double eta_d) {
  WeightedEnsemble photons = retrieve_t_to_s(t_memory, eta_e1, "L", "a");
  photons = retrieve_t_to_s(photons, eta_e1, "R", "b");
  const auto bsm = apply_bsm(photons, eta_d, 0.0, "a", "b");
  return build_report("local", bsm, pme_state("L", "R"), s_mode("L", Arm::d));
}

PipelineReport local_entanglement_pipeline(const ProtocolParams& params,
                                           PhaseSetting phi_l, PhaseSetting phi_r) {
  const WeightedEnsemble left =
      store_to_memory(input_photon_state(phi_l), params.eta_p, params.eta_s, "L");
  const WeightedEnsemble right =
      store_to_memory(input_photon_state(phi_r), params.eta_p, params.eta_s, "R");
  return herald_local(fock::tensor(left, right), params.eta_e1, params.eta_d);
}

PipelineReport link_pipeline(const ProtocolParams& params) {
  const double eta_t = rates::fiber_transmission(params.l0_km(), params.l_att_km);
  WeightedEnsemble memory(fock::tensor(pme_state("A_L", "A_R"), pme_state("B_L", "B_R")));
  memory = retrieve_s_to_photon(memory, params.eta_e2, "A_R", "a");
  memory = retrieve_s_to_photon(memory, params.eta_e2, "B_L", "b");
  memory = apply_path_loss(memory, "a", eta_t);
  memory = apply_path_loss(memory, "b", eta_t);
  const auto bsm = apply_bsm(memory, params.eta_d, 0.0, "a", "b");
  return build_report("link", bsm, pme_state("A_L", "B_R"), s_mode("A_L", Arm::d));
}

PipelineReport swap_pipeline(const ProtocolParams& params) {
  WeightedEnsemble memory(fock::tensor(pme_state("A", "B_L"), pme_state("B_R", "C")));
  memory = retrieve_s_to_photon(memory, params.eta_e2, "B_L", "a");
  memory = retrieve_s_to_photon(memory, params.eta_e2, "B_R", "b");
  const auto bsm = apply_bsm(memory, params.eta_d, 0.0, "a", "b");
  return build_report("swap", bsm, pme_state("A", "C"), s_mode("A", Arm::d));
}

}  // namespace repeaterlab::optics
