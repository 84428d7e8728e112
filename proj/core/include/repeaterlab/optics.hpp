#pragma once

#include <array>
#include <compare>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repeaterlab/fock.hpp"
#include "repeaterlab/params.hpp"

// Linear-optical protocol stages on atomic-ensemble memories.
//
// Memory qubits are pairs of ensembles (u, d) at a named site. A site's
// collective modes are T (freshly stored) and S (after conversion). Photons
// emitted from arm u are H polarized and from arm d V polarized; a
// photon's spatial path names which input port of the Bell analyzer it
// enters.

namespace repeaterlab::optics {

using fock::ModeId;
using fock::PureState;
using fock::WeightedEnsemble;

/// Unknown channel phase of the source's two output paths.
struct PhaseSetting {
  double phi = 0.0;
  /// phi reduced to [0, 2 pi).
  double reduced() const;
};

inline constexpr int kDetectors = 4;

/// Number-resolved click counts of detectors D1..D4.
struct DetectionPattern {
  std::array<int, kDetectors> clicks{};

  int total() const;
  std::string describe() const;  // e.g. "D1&D3", "D3x2", "none"

  friend auto operator<=>(const DetectionPattern&, const DetectionPattern&) = default;
};

enum class BsmOutcome { accept_same, accept_cross, reject };

std::string to_string(BsmOutcome outcome);

/// Central PBS (transmit H, reflect V) feeding two arms c, d, each analyzed
/// in the +/- basis. D1 = c+, D2 = c-, D3 = d+, D4 = d-.
struct BsmNetwork {
  /// Inputs (a_H, a_V, b_H, b_V) to arms (c_H, c_V, d_H, d_V).
  static Eigen::Matrix4cd central_pbs();
  /// (c_H, c_V, d_H, d_V) to (D1, D2, D3, D4).
  static Eigen::Matrix4cd analyzers();
  /// Composite map; column i holds the output amplitudes of input i.
  static Eigen::Matrix4cd matrix();

  static std::array<ModeId, 4> input_modes(const std::string& path_a,
                                           const std::string& path_b);
  static std::array<ModeId, kDetectors> detector_modes();
};

/// Path modes of the single-photon source, registry order (u_in, d_in).
ModeId source_path(fock::Arm arm);

ModeId t_mode(const std::string& site, fock::Arm arm);
ModeId s_mode(const std::string& site, fock::Arm arm);
ModeId photon_mode(const std::string& path, fock::Arm arm);

/// (|1>_u|0>_d + e^{i phi}|0>_u|1>_d) / sqrt 2 over the source's paths.
PureState input_photon_state(PhaseSetting phase);

/// Absorbs the source photon into the T modes of `site`, keeping the vacuum
/// branch of weight 1 - eta_p * eta_s.
WeightedEnsemble store_to_memory(const PureState& photon, double eta_p,
                                 double eta_s, const std::string& site);

/// T -> S conversion at `site`, emitting an H (u) or V (d) photon on `path`
/// that survives with probability eta_e1.
WeightedEnsemble retrieve_t_to_s(const WeightedEnsemble& memory, double eta_e1,
                                 const std::string& site, const std::string& path);

/// Reads the S excitation of `site` out onto `path` with efficiency eta_e2.
WeightedEnsemble retrieve_s_to_photon(const WeightedEnsemble& memory,
                                      double eta_e2, const std::string& site,
                                      const std::string& path);

/// Independent loss on the H and V modes of a path.
WeightedEnsemble apply_path_loss(const WeightedEnsemble& ens,
                                 const std::string& path, double eta);

struct BsmBranch {
  DetectionPattern pattern;
  double probability;
  WeightedEnsemble memory;  // detector modes removed
};

/// Sends paths a and b through the analyzer, applies detector efficiency
/// eta_d and measures D1..D4. Each detector independently registers one
/// extra dark click with probability p_d. Branches are sorted by pattern.
std::vector<BsmBranch> apply_bsm(const WeightedEnsemble& photons, double eta_d,
                                 double p_d, const std::string& path_a = "a",
                                 const std::string& path_b = "b");

/// Accepts exactly one click in each of two detectors on different arms.
BsmOutcome classify(const DetectionPattern& pattern);

struct Correction {
  bool z_flip = false;  // pi phase on the correction mode
  double phase = 0.0;   // residual free phase, (-pi/2, pi/2]

  std::string describe() const;
};

struct CorrectedFidelity {
  double fidelity = 0.0;
  Correction correction;
};

/// Best fidelity to `target` over phase corrections exp(i x n) on the given
/// d-arm mode. Throws std::invalid_argument for a rejected outcome.
CorrectedFidelity corrected_fidelity(const WeightedEnsemble& memory,
                                     BsmOutcome outcome, const PureState& target,
                                     const ModeId& correction_mode);

/// (T_u^dag + e^{i phi} T_d^dag)|0 0>/sqrt 2 at `site`.
PureState ensemble_qubit_state(const std::string& site, PhaseSetting phase);

/// (S_u1^dag S_u2^dag + S_d1^dag S_d2^dag)|vac>/sqrt 2 over sites 1 and 2,
/// registry (S1u, S1d, S2u, S2d).
PureState pme_state(const std::string& site1, const std::string& site2);

struct HeraldedState {
  DetectionPattern pattern;
  BsmOutcome outcome;
  double probability;
  WeightedEnsemble memory;
  CorrectedFidelity corrected;
};

struct PipelineReport {
  std::string stage;
  double accept_prob = 0.0;
  std::vector<HeraldedState> heralds;  // accepting patterns only
  double fidelity = 0.0;               // acceptance-weighted mean
  std::string correction;              // pattern -> correction map
  std::size_t branch_count = 0;

  double min_fidelity() const;
};

/// Heralds entanglement between the S modes of sites L and R from a T-mode
/// memory state over both sites. Dark counts are excluded.
PipelineReport herald_local(const WeightedEnsemble& t_memory, double eta_e1,
                            double eta_d);

PipelineReport local_entanglement_pipeline(const ProtocolParams& params,
                                           PhaseSetting phi_l, PhaseSetting phi_r);

/// Joins PME pairs (A_L, A_R) and (B_L, B_R) across a fiber of length
/// l0_km() by measuring A_R and B_L; leaves A_L and B_R entangled.
PipelineReport link_pipeline(const ProtocolParams& params);

/// Swaps pairs (A, B_L) and (B_R, C) at the middle node; leaves A and C
/// entangled.
PipelineReport swap_pipeline(const ProtocolParams& params);

}  // namespace repeaterlab::optics
