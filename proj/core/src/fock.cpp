#include "repeaterlab/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace repeaterlab::fock {
namespace {

constexpr double kUnitarityTolerance = 1e-10;
constexpr double kWeightSumTolerance = 1e-10;

std::string arm_name(Arm arm) { return arm == Arm::u ? "u" : "d"; }

void require_same_registry(const PureState& a, const PureState& b,
                           const char* what) {
  if (a.registry() != b.registry()) {
    throw std::invalid_argument(std::string(what) + ": registry mismatch");
  }
}

double binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

ModeRegistry without(const ModeRegistry& registry,
                     std::span<const std::size_t> drop) {
  std::vector<ModeId> kept;
  for (std::size_t i = 0; i < registry.size(); ++i) {
    if (std::find(drop.begin(), drop.end(), i) == drop.end()) {
      kept.push_back(registry[i]);
    }
  }
  return ModeRegistry(std::move(kept));
}

Occupation erase_indices(const Occupation& occ,
                         std::span<const std::size_t> drop) {
  Occupation out;
  out.reserve(occ.size() - drop.size());
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (std::find(drop.begin(), drop.end(), i) == drop.end()) {
      out.push_back(occ[i]);
    }
  }
  return out;
}

}  // namespace

ModeId ModeId::ensemble(std::string site, Arm arm, Excitation excitation) {
  ModeId id;
  id.kind = Kind::ensemble;
  id.name = std::move(site);
  id.arm = arm;
  id.excitation = excitation;
  return id;
}

ModeId ModeId::photon(std::string path,
                      std::optional<Polarization> polarization) {
  ModeId id;
  id.kind = Kind::photon;
  id.name = std::move(path);
  id.polarization = polarization;
  return id;
}

ModeId ModeId::environment(int index) {
  ModeId id;
  id.kind = Kind::environment;
  id.index = index;
  return id;
}

std::string ModeId::label() const {
  switch (kind) {
    case Kind::ensemble:
      return std::string(excitation == Excitation::T ? "T" : "S") + "[" +
             name + "," + arm_name(arm) + "]";
    case Kind::photon:
      if (polarization) {
        return "ph[" + name + "," +
               (*polarization == Polarization::H ? "H" : "V") + "]";
      }
      return "ph[" + name + "]";
    case Kind::environment:
      return "env[" + std::to_string(index) + "]";
  }
  return "?";
}

ModeRegistry::ModeRegistry(std::vector<ModeId> modes) : modes_(std::move(modes)) {
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    for (std::size_t j = i + 1; j < modes_.size(); ++j) {
      if (modes_[i] == modes_[j]) {
        throw std::invalid_argument("duplicate mode " + modes_[i].label());
      }
    }
  }
}

bool ModeRegistry::contains(const ModeId& mode) const {
  return find(mode).has_value();
}

std::optional<std::size_t> ModeRegistry::find(const ModeId& mode) const {
  auto it = std::find(modes_.begin(), modes_.end(), mode);
  if (it == modes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - modes_.begin());
}

std::size_t ModeRegistry::index_of(const ModeId& mode) const {
  if (auto i = find(mode)) return *i;
  throw std::out_of_range("mode " + mode.label() + " is not registered");
}

PureState::PureState(ModeRegistry registry, int cutoff)
    : registry_(std::move(registry)), cutoff_(cutoff) {
  if (cutoff_ < 1 || cutoff_ > 255) {
    throw std::invalid_argument("occupation cutoff must lie in [1, 255]");
  }
}

Complex PureState::amplitude(const Occupation& occupation) const {
  auto it = terms_.find(occupation);
  return it == terms_.end() ? Complex{} : it->second;
}

void PureState::add(const Occupation& occupation, Complex amplitude) {
  if (occupation.size() != registry_.size()) {
    throw std::invalid_argument("occupation vector length mismatch");
  }
  for (std::uint8_t n : occupation) {
    if (n > cutoff_) {
      throw CutoffExceeded("occupation " + std::to_string(n) +
                           " exceeds cutoff " + std::to_string(cutoff_));
    }
  }
  terms_[occupation] += amplitude;
}

double PureState::norm_squared() const {
  double sum = 0.0;
  for (const auto& [occ, amp] : terms_) sum += std::norm(amp);
  return sum;
}

PureState PureState::normalized() const {
  const double norm = std::sqrt(norm_squared());
  if (!(norm > 0.0)) throw std::domain_error("cannot normalize the zero vector");
  PureState out(registry_, cutoff_);
  for (const auto& [occ, amp] : terms_) {
    const Complex scaled = amp / norm;
    if (std::abs(scaled) >= kAmplitudePrune) out.terms_.emplace(occ, scaled);
  }
  return out;
}

PureState PureState::pruned() const {
  PureState out(registry_, cutoff_);
  for (const auto& [occ, amp] : terms_) {
    if (std::abs(amp) >= kAmplitudePrune) out.terms_.emplace(occ, amp);
  }
  return out;
}

std::string PureState::dump() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [occ, amp] : terms_) {
    for (std::size_t i = 0; i < occ.size(); ++i) {
      if (i > 0) out << ',';
      out << static_cast<int>(occ[i]);
    }
    out << '\t' << amp.real() << '\t' << amp.imag() << '\n';
  }
  return out.str();
}

PureState vacuum(ModeRegistry registry, int cutoff) {
  if (registry.empty()) {
    throw std::invalid_argument("vacuum requires a nonempty registry");
  }
  const std::size_t size = registry.size();
  PureState out(std::move(registry), cutoff);
  out.add(Occupation(size, 0), 1.0);
  return out;
}

PureState create(const PureState& state, const ModeId& mode) {
  const std::size_t idx = state.registry().index_of(mode);
  PureState out(state.registry(), state.cutoff());
  for (const auto& [occ, amp] : state.terms()) {
    Occupation next = occ;
    if (next[idx] >= state.cutoff()) {
      throw CutoffExceeded("creation on " + mode.label() +
                           " exceeds the occupation cutoff");
    }
    next[idx] += 1;
    out.add(next, amp * std::sqrt(static_cast<double>(next[idx])));
  }
  return out;
}

PureState apply_linear_map(const PureState& state, std::span<const ModeId> modes,
                           const Eigen::MatrixXcd& u) {
  const auto k = static_cast<Eigen::Index>(modes.size());
  if (u.rows() != k || u.cols() != k) {
    throw std::invalid_argument("linear map dimension does not match mode list");
  }
  const Eigen::MatrixXcd defect =
      u.adjoint() * u - Eigen::MatrixXcd::Identity(k, k);
  if (k > 0 && defect.cwiseAbs().maxCoeff() > kUnitarityTolerance) {
    throw std::invalid_argument("linear map is not unitary");
  }
  std::vector<std::size_t> idx;
  for (const ModeId& m : modes) {
    if (!m.is_optical()) {
      throw std::invalid_argument("linear map on ensemble mode " + m.label());
    }
    const std::size_t i = state.registry().index_of(m);
    if (std::find(idx.begin(), idx.end(), i) != idx.end()) {
      throw std::invalid_argument("linear map modes must be distinct");
    }
    idx.push_back(i);
  }

  // Expand with unbounded occupations first: terms above the cutoff may
  // cancel, so the cutoff is only enforced on what survives.
  std::map<Occupation, Complex> accumulated;
  for (const auto& [occ, amp] : state.terms()) {
    Occupation base = occ;
    double factorials = 1.0;
    for (std::size_t i : idx) {
      for (int f = 2; f <= occ[i]; ++f) factorials *= f;
      base[i] = 0;
    }
    std::map<Occupation, Complex> poly{{base, amp / std::sqrt(factorials)}};
    for (std::size_t in = 0; in < idx.size(); ++in) {
      for (int rep = 0; rep < occ[idx[in]]; ++rep) {
        std::map<Occupation, Complex> next;
        for (const auto& [term, coeff] : poly) {
          for (std::size_t out = 0; out < idx.size(); ++out) {
            const Complex entry = u(static_cast<Eigen::Index>(out),
                                    static_cast<Eigen::Index>(in));
            if (entry == Complex{}) continue;
            Occupation raised = term;
            if (raised[idx[out]] == 255) {
              throw CutoffExceeded("occupation overflow in linear map");
            }
            raised[idx[out]] += 1;
            next[raised] +=
                coeff * entry * std::sqrt(static_cast<double>(raised[idx[out]]));
          }
        }
        poly = std::move(next);
      }
    }
    for (const auto& [term, coeff] : poly) accumulated[term] += coeff;
  }

  PureState out(state.registry(), state.cutoff());
  for (const auto& [term, coeff] : accumulated) {
    if (std::abs(coeff) < kAmplitudePrune) continue;
    out.add(term, coeff);  // throws if a surviving term is above the cutoff
  }
  return out;
}

Complex inner_product(const PureState& bra, const PureState& ket) {
  require_same_registry(bra, ket, "inner_product");
  const PureState& small = bra.term_count() <= ket.term_count() ? bra : ket;
  const PureState& large = bra.term_count() <= ket.term_count() ? ket : bra;
  Complex sum{};
  for (const auto& [occ, amp] : small.terms()) {
    const Complex other = large.amplitude(occ);
    sum += (&small == &bra) ? std::conj(amp) * other : std::conj(other) * amp;
  }
  return sum;
}

PureState tensor(const PureState& lhs, const PureState& rhs) {
  std::vector<ModeId> modes = lhs.registry().modes();
  modes.insert(modes.end(), rhs.registry().modes().begin(),
               rhs.registry().modes().end());
  PureState out(ModeRegistry(std::move(modes)),
                std::max(lhs.cutoff(), rhs.cutoff()));
  for (const auto& [a, amp_a] : lhs.terms()) {
    for (const auto& [b, amp_b] : rhs.terms()) {
      Occupation occ = a;
      occ.insert(occ.end(), b.begin(), b.end());
      out.add(occ, amp_a * amp_b);
    }
  }
  return out.pruned();
}

PureState relabel(const PureState& state, const ModeId& from, const ModeId& to) {
  std::vector<ModeId> modes = state.registry().modes();
  modes[state.registry().index_of(from)] = to;
  PureState out(ModeRegistry(std::move(modes)), state.cutoff());
  for (const auto& [occ, amp] : state.terms()) out.add(occ, amp);
  return out;
}

PureState transfer(const PureState& state, const ModeId& from,
                   std::span<const ModeId> to) {
  const std::size_t src = state.registry().index_of(from);
  std::vector<ModeId> modes = state.registry().modes();
  modes.erase(modes.begin() + static_cast<std::ptrdiff_t>(src));
  modes.insert(modes.end(), to.begin(), to.end());
  PureState out(ModeRegistry(std::move(modes)), state.cutoff());
  const std::size_t drop[] = {src};
  for (const auto& [occ, amp] : state.terms()) {
    Occupation next = erase_indices(occ, drop);
    next.insert(next.end(), to.size(), occ[src]);
    out.add(next, amp);
  }
  return out;
}

PureState phase_shift(const PureState& state, const ModeId& mode, double angle) {
  const std::size_t idx = state.registry().index_of(mode);
  PureState out(state.registry(), state.cutoff());
  for (const auto& [occ, amp] : state.terms()) {
    out.add(occ, amp * std::polar(1.0, angle * occ[idx]));
  }
  return out;
}

PureState reorder(const PureState& state, const ModeRegistry& order) {
  if (order.size() != state.registry().size()) {
    throw std::invalid_argument("reorder: registry sizes differ");
  }
  std::vector<std::size_t> source(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    source[i] = state.registry().index_of(order[i]);
  }
  PureState out(order, state.cutoff());
  for (const auto& [occ, amp] : state.terms()) {
    Occupation next(occ.size());
    for (std::size_t i = 0; i < occ.size(); ++i) next[i] = occ[source[i]];
    out.add(next, amp);
  }
  return out;
}

WeightedEnsemble::WeightedEnsemble(PureState pure) {
  branches_.push_back({1.0, std::move(pure)});
}

WeightedEnsemble::WeightedEnsemble(std::vector<Branch> branches) {
  double total = 0.0;
  for (const Branch& b : branches) {
    if (b.weight < 0.0 || !std::isfinite(b.weight)) {
      throw std::invalid_argument("branch weights must be finite and nonnegative");
    }
    total += b.weight;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("ensemble has no positive weight");
  }
  double kept = 0.0;
  for (Branch& b : branches) {
    if (b.weight / total < kWeightPrune) continue;
    kept += b.weight;
    branches_.push_back(std::move(b));
  }
  for (Branch& b : branches_) b.weight /= kept;
  for (const Branch& b : branches_) {
    if (b.state.registry() != branches_.front().state.registry()) {
      throw std::invalid_argument("ensemble branches must share one registry");
    }
  }
}

double WeightedEnsemble::weight_sum() const {
  double sum = 0.0;
  for (const Branch& b : branches_) sum += b.weight;
  return sum;
}

WeightedEnsemble tensor(const WeightedEnsemble& lhs, const WeightedEnsemble& rhs) {
  std::vector<Branch> out;
  for (const Branch& a : lhs.branches()) {
    for (const Branch& b : rhs.branches()) {
      out.push_back({a.weight * b.weight, tensor(a.state, b.state)});
    }
  }
  return WeightedEnsemble(std::move(out));
}

WeightedEnsemble apply_loss(const WeightedEnsemble& ens, const ModeId& mode,
                            double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("loss transmissivity must lie in [0, 1]");
  }
  if (eta == 1.0) return ens;
  const std::size_t idx = ens.registry().index_of(mode);
  std::vector<Branch> out;
  for (const Branch& branch : ens.branches()) {
    // Conditioned on m photons reaching the environment, |n> keeps
    // sqrt(C(n, m) eta^(n-m) (1-eta)^m) |n - m>.
    std::map<int, PureState> by_lost;
    for (const auto& [occ, amp] : branch.state.terms()) {
      const int n = occ[idx];
      for (int m = 0; m <= n; ++m) {
        const double k =
            std::sqrt(binomial(n, m) * std::pow(eta, n - m) * std::pow(1.0 - eta, m));
        if (k == 0.0) continue;
        Occupation next = occ;
        next[idx] = static_cast<std::uint8_t>(n - m);
        auto [it, inserted] = by_lost.try_emplace(
            m, branch.state.registry(), branch.state.cutoff());
        it->second.add(next, amp * k);
      }
    }
    for (auto& [m, piece] : by_lost) {
      const double p = piece.norm_squared();
      if (!(p > 0.0)) continue;
      out.push_back({branch.weight * p, piece.normalized()});
    }
  }
  return WeightedEnsemble(std::move(out));
}

std::vector<JointOutcome> measure_numbers(const WeightedEnsemble& ens,
                                          std::span<const ModeId> modes) {
  std::vector<std::size_t> idx;
  for (const ModeId& m : modes) idx.push_back(ens.registry().index_of(m));
  const ModeRegistry remaining = without(ens.registry(), idx);

  struct Accumulated {
    double probability = 0.0;
    std::vector<Branch> branches;
  };
  std::map<std::vector<int>, Accumulated> outcomes;
  for (const Branch& branch : ens.branches()) {
    std::map<std::vector<int>, PureState> projected;
    for (const auto& [occ, amp] : branch.state.terms()) {
      std::vector<int> key;
      for (std::size_t i : idx) key.push_back(occ[i]);
      auto [it, inserted] =
          projected.try_emplace(key, remaining, branch.state.cutoff());
      it->second.add(erase_indices(occ, idx), amp);
    }
    for (auto& [key, piece] : projected) {
      const double p = piece.norm_squared();
      if (!(p > 0.0)) continue;
      Accumulated& acc = outcomes[key];
      acc.probability += branch.weight * p;
      acc.branches.push_back({branch.weight * p, piece.normalized()});
    }
  }

  std::vector<JointOutcome> result;
  for (auto& [key, acc] : outcomes) {
    result.push_back({key, acc.probability, WeightedEnsemble(std::move(acc.branches))});
  }
  return result;
}

std::vector<NumberOutcome> measure_number(const WeightedEnsemble& ens,
                                          const ModeId& mode) {
  const ModeId single[] = {mode};
  std::vector<NumberOutcome> result;
  for (JointOutcome& o : measure_numbers(ens, single)) {
    result.push_back({o.counts.front(), o.probability, std::move(o.conditional)});
  }
  return result;
}

double fidelity(const WeightedEnsemble& ens, const PureState& target) {
  double sum = 0.0;
  for (const Branch& b : ens.branches()) {
    require_same_registry(target, b.state, "fidelity");
    sum += b.weight * std::norm(inner_product(target, b.state));
  }
  return sum;
}

}  // namespace repeaterlab::fock
