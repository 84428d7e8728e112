#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Sparse Fock-space states over a small set of named bosonic modes.
//
// A PureState is a map from occupation vectors to amplitudes; mixed states
// are WeightedEnsembles of pure branches. Everything is a value: operations
// take states by const reference and return new ones.

namespace repeaterlab::fock {

using Complex = std::complex<double>;

inline constexpr int kDefaultCutoff = 2;
inline constexpr double kAmplitudePrune = 1e-14;
inline constexpr double kWeightPrune = 1e-12;

enum class Arm : std::uint8_t { u, d };
enum class Excitation : std::uint8_t { T, S };
enum class Polarization : std::uint8_t { H, V };

/// Label of one bosonic mode.
struct ModeId {
  enum class Kind : std::uint8_t { ensemble, photon, environment };

  Kind kind = Kind::photon;
  std::string name;  // ensemble site or photon path
  Arm arm = Arm::u;
  Excitation excitation = Excitation::T;
  std::optional<Polarization> polarization;
  int index = 0;  // environment modes only

  static ModeId ensemble(std::string site, Arm arm, Excitation excitation);
  static ModeId photon(std::string path,
                       std::optional<Polarization> polarization = std::nullopt);
  static ModeId environment(int index);

  bool is_optical() const { return kind != Kind::ensemble; }
  std::string label() const;

  friend bool operator==(const ModeId&, const ModeId&) = default;
};

/// Ordered list of distinct modes.
class ModeRegistry {
 public:
  ModeRegistry() = default;
  explicit ModeRegistry(std::vector<ModeId> modes);

  std::size_t size() const { return modes_.size(); }
  bool empty() const { return modes_.empty(); }
  const ModeId& operator[](std::size_t i) const { return modes_[i]; }
  const std::vector<ModeId>& modes() const { return modes_; }

  bool contains(const ModeId& mode) const;
  std::optional<std::size_t> find(const ModeId& mode) const;
  /// Throws std::out_of_range when the mode is not registered.
  std::size_t index_of(const ModeId& mode) const;

  friend bool operator==(const ModeRegistry&, const ModeRegistry&) = default;

 private:
  std::vector<ModeId> modes_;
};

using Occupation = std::vector<std::uint8_t>;
using Terms = std::map<Occupation, Complex>;

class CutoffExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PureState {
 public:
  explicit PureState(ModeRegistry registry, int cutoff = kDefaultCutoff);

  const ModeRegistry& registry() const { return registry_; }
  int cutoff() const { return cutoff_; }
  const Terms& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }

  Complex amplitude(const Occupation& occupation) const;
  /// Accumulates into a basis term. Throws CutoffExceeded above the cutoff.
  void add(const Occupation& occupation, Complex amplitude);

  double norm_squared() const;
  /// Unit-norm copy. Throws std::domain_error for the zero vector.
  PureState normalized() const;
  /// Drops terms with magnitude below kAmplitudePrune.
  PureState pruned() const;

  /// One line per term: "n0,n1,...\tre\tim".
  std::string dump() const;

 private:
  ModeRegistry registry_;
  int cutoff_;
  Terms terms_;
};

PureState vacuum(ModeRegistry registry, int cutoff = kDefaultCutoff);

/// Bosonic creation operator with its sqrt(n + 1) factor. Not normalized.
PureState create(const PureState& state, const ModeId& mode);

/// Substitutes a_i^dagger -> sum_j u(j, i) a_j^dagger over the listed optical
/// modes. Throws std::invalid_argument if u is not unitary to 1e-10 or if a
/// listed mode is an ensemble mode; CutoffExceeded on overflow.
PureState apply_linear_map(const PureState& state, std::span<const ModeId> modes,
                           const Eigen::MatrixXcd& u);

/// <bra|ket>. Registries must be equal.
Complex inner_product(const PureState& bra, const PureState& ket);

/// Tensor product; the registries must be disjoint.
PureState tensor(const PureState& lhs, const PureState& rhs);

/// Renames one mode in place.
PureState relabel(const PureState& state, const ModeId& from, const ModeId& to);

/// Replaces mode `from` with the modes `to`; each receives the occupation
/// `from` had, i.e. |k> -> |k>|k>...  The new modes are appended.
PureState transfer(const PureState& state, const ModeId& from,
                   std::span<const ModeId> to);

/// Multiplies each term by exp(i * angle * n_mode).
PureState phase_shift(const PureState& state, const ModeId& mode, double angle);

/// Same state expressed over a permutation of its registry.
PureState reorder(const PureState& state, const ModeRegistry& order);

struct Branch {
  double weight;
  PureState state;
};

/// Probabilistic mixture of pure states sharing one registry.
class WeightedEnsemble {
 public:
  explicit WeightedEnsemble(PureState pure);
  /// Drops branches below kWeightPrune and renormalizes the rest. Throws
  /// std::invalid_argument on negative weights, mismatched registries or
  /// when nothing survives.
  explicit WeightedEnsemble(std::vector<Branch> branches);

  const std::vector<Branch>& branches() const { return branches_; }
  std::size_t size() const { return branches_.size(); }
  const ModeRegistry& registry() const { return branches_.front().state.registry(); }

  double weight_sum() const;

  /// Applies a state map to every branch.
  template <typename Fn>
  WeightedEnsemble map(Fn&& fn) const {
    std::vector<Branch> out;
    out.reserve(branches_.size());
    for (const Branch& b : branches_) out.push_back({b.weight, fn(b.state)});
    return WeightedEnsemble(std::move(out));
  }

 private:
  std::vector<Branch> branches_;
};

WeightedEnsemble tensor(const WeightedEnsemble& lhs, const WeightedEnsemble& rhs);

/// Photon loss of transmissivity eta on one mode: a beamsplitter into a
/// fresh environment mode that is traced out immediately.
WeightedEnsemble apply_loss(const WeightedEnsemble& ens, const ModeId& mode,
                            double eta);

struct NumberOutcome {
  int count;
  double probability;
  WeightedEnsemble conditional;  // measured mode removed
};

/// Number-resolved measurement of one mode; outcomes of zero probability
/// are omitted, so the listed probabilities sum to one.
std::vector<NumberOutcome> measure_number(const WeightedEnsemble& ens,
                                          const ModeId& mode);

struct JointOutcome {
  std::vector<int> counts;  // in the order of the measured modes
  double probability;
  WeightedEnsemble conditional;  // measured modes removed
};

/// Joint number measurement of several modes.
std::vector<JointOutcome> measure_numbers(const WeightedEnsemble& ens,
                                          std::span<const ModeId> modes);

/// Sum over branches of weight * |<target|branch>|^2.
double fidelity(const WeightedEnsemble& ens, const PureState& target);

// Conversion of a collective T excitation into S while emitting a photon.
//
// Each atom has levels g, s, t and e2; the photon couples s <-> e2 with
// strength g and a classical field drives t <-> e2 with Rabi frequency omega.
// hbar = 1.

/// Full-space Hamiltonian over n_atoms four-level atoms and a photon mode
/// truncated at one excitation. Basis index: photon * 4^N + sum level_i 4^i.
Eigen::MatrixXd conversion_hamiltonian(double g, double omega, int n_atoms);

/// Restriction to {S^dag|g>|1>, T^dag|g>|0>, E^dag|g>|0>}.
Eigen::Matrix3d conversion_sector_hamiltonian(double g, double omega,
                                              int n_atoms);

/// cos(theta) S^dag|g>|1> - sin(theta) T^dag|g>|0>, tan(theta) = g / omega,
/// in the full-space basis.
Eigen::VectorXd dark_state(double g, double omega, int n_atoms);

/// ||H |D>|| / max(|g|, |omega|). Requires n_atoms in [1, 4] and
/// (g, omega) != (0, 0); throws std::invalid_argument otherwise.
double dark_state_residual(double g, double omega, int n_atoms);

}  // namespace repeaterlab::fock
