#include <cmath>
#include <stdexcept>

#include "repeaterlab/fock.hpp"

namespace repeaterlab::fock {
namespace {

enum Level : int { kGround = 0, kS = 1, kT = 2, kE2 = 3 };
constexpr int kLevels = 4;

int atom_space(int n_atoms) {
  int dim = 1;
  for (int i = 0; i < n_atoms; ++i) dim *= kLevels;
  return dim;
}

int level_of(int atoms, int atom) {
  for (int i = 0; i < atom; ++i) atoms /= kLevels;
  return atoms % kLevels;
}

int with_level(int atoms, int atom, int level) {
  int place = 1;
  for (int i = 0; i < atom; ++i) place *= kLevels;
  return atoms + (level - level_of(atoms, atom)) * place;
}

void check_args(double g, double omega, int n_atoms) {
  if (n_atoms < 1 || n_atoms > 4) {
    throw std::invalid_argument("n_atoms must lie in [1, 4]");
  }
  if (g == 0.0 && omega == 0.0) {
    throw std::invalid_argument("coupling and Rabi frequency cannot both vanish");
  }
}

// (1/sqrt N) sum_i |level>_i with all other atoms in g, photon number fixed.
Eigen::VectorXd collective(int level, int photons, int n_atoms) {
  const int atoms = atom_space(n_atoms);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * atoms);
  const double amp = 1.0 / std::sqrt(static_cast<double>(n_atoms));
  for (int i = 0; i < n_atoms; ++i) {
    v(photons * atoms + with_level(0, i, level)) = amp;
  }
  return v;
}

}  // namespace

Eigen::MatrixXd conversion_hamiltonian(double g, double omega, int n_atoms) {
  check_args(g, omega, n_atoms);
  const int atoms = atom_space(n_atoms);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * atoms, 2 * atoms);
  for (int photons = 0; photons <= 1; ++photons) {
    for (int config = 0; config < atoms; ++config) {
      const int from = photons * atoms + config;
      for (int i = 0; i < n_atoms; ++i) {
        const int level = level_of(config, i);
        // g a sigma_{e2 s}: absorb the photon, s -> e2.
        if (level == kS && photons == 1) {
          const int to = with_level(config, i, kE2);
          h(to, from) += g;
          h(from, to) += g;
        }
        // omega sigma_{e2 t}: classical drive, t -> e2.
        if (level == kT) {
          const int to = photons * atoms + with_level(config, i, kE2);
          h(to, from) += omega;
          h(from, to) += omega;
        }
      }
    }
  }
  return h;
}

Eigen::Matrix3d conversion_sector_hamiltonian(double g, double omega,
                                              int n_atoms) {
  const Eigen::MatrixXd h = conversion_hamiltonian(g, omega, n_atoms);
  Eigen::MatrixXd basis(h.rows(), 3);
  basis.col(0) = collective(kS, 1, n_atoms);
  basis.col(1) = collective(kT, 0, n_atoms);
  basis.col(2) = collective(kE2, 0, n_atoms);
  return basis.transpose() * h * basis;
}

Eigen::VectorXd dark_state(double g, double omega, int n_atoms) {
  check_args(g, omega, n_atoms);
  const double theta = std::atan2(g, omega);
  return std::cos(theta) * collective(kS, 1, n_atoms) -
         std::sin(theta) * collective(kT, 0, n_atoms);
}

double dark_state_residual(double g, double omega, int n_atoms) {
  const Eigen::VectorXd d = dark_state(g, omega, n_atoms);
  const Eigen::VectorXd hd = conversion_hamiltonian(g, omega, n_atoms) * d;
  return hd.norm() / std::max(std::abs(g), std::abs(omega));
}

}  // namespace repeaterlab::fock
