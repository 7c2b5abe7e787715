// Copyright 2026 The critmetro Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRITMETRO_ORACLE_HPP
#define CRITMETRO_ORACLE_HPP

// Brute-force exact diagonalization of small periodic Ising chains. Used as
// ground truth for the free-fermion formulas in ising.hpp.
//
// Basis convention: bit i of the index is site i, bit set = spin down
// (sz = -1), so M_z = N/2 - popcount(index).

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "critmetro/errors.hpp"

namespace critmetro::oracle {

inline constexpr int kMaxSites = 12;

struct DenseState {
  int n_sites = 0;
  std::vector<std::complex<double>> amplitudes;

  double norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return std::sqrt(s);
  }
};

namespace detail {

inline void check_sites(int n_sites) {
  if (n_sites > kMaxSites) throw SizeError("oracle: N = " + std::to_string(n_sites) + " exceeds " + std::to_string(kMaxSites));
  if (n_sites < 2 || n_sites % 2 != 0) throw ConfigError("oracle: N must be even and >= 2");
}

inline std::uint32_t rotate(std::uint32_t s, int n) {
  const std::uint32_t mask = (1u << n) - 1u;
  return ((s << 1) | (s >> (n - 1))) & mask;
}

inline double diagonal(std::uint32_t s, int n, double field) {
  return field * (n - 2.0 * std::popcount(s));
}

// Calls visit(target, amplitude) for every nonzero H_{target, s}.
template <class Visit>
void for_each_element(std::uint32_t s, int n, double coupling, double field, Visit&& visit) {
  visit(s, diagonal(s, n, field));
  for (int i = 0; i < n; ++i) {
    const int next = (i + 1) % n;
    visit(s ^ (1u << i) ^ (1u << next), coupling);
  }
}

inline DenseState normalized_real(int n, const std::vector<double>& v) {
  DenseState out;
  out.n_sites = n;
  out.amplitudes.resize(v.size());
  // Fix the global sign so the largest amplitude is positive.
  std::size_t big = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::fabs(v[i]) > std::fabs(v[big])) big = i;
  const double sign = v[big] < 0.0 ? -1.0 : 1.0;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < v.size(); ++i) out.amplitudes[i] = sign * v[i] / norm;
  return out;
}

/// Ground state of the full even-parity sector (2^{N-1} states), no
/// translation reduction. Slow beyond N = 10; used to validate the reduced solver.
inline DenseState even_sector_ground_state(int n, double coupling, double field) {
  check_sites(n);
  const std::uint32_t dim = 1u << n;
  std::vector<int> index(dim, -1);
  std::vector<std::uint32_t> states;
  for (std::uint32_t s = 0; s < dim; ++s)
    if (std::popcount(s) % 2 == 0) {
      index[s] = static_cast<int>(states.size());
      states.push_back(s);
    }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(states.size(), states.size());
  for (std::size_t a = 0; a < states.size(); ++a)
    for_each_element(states[a], n, coupling, field, [&](std::uint32_t t, double amp) { h(index[t], a) += amp; });
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  std::vector<double> full(dim, 0.0);
  for (std::size_t a = 0; a < states.size(); ++a) full[states[a]] = solver.eigenvectors()(a, 0);
  return normalized_real(n, full);
}

}  // namespace detail

/**
  Ground state of H = J sum sx_i sx_{i+1} + field sum sz_i with periodic
  boundaries, restricted to the even fermion-parity sector (even number of
  down spins) where the paired free-fermion state lives.

  Within that sector the ground state is translation invariant, so the
  dense symmetric eigenproblem is solved on the zero-momentum block spanned
  by normalized translation orbits and then expanded back to 2^N amplitudes.
*/
inline DenseState exact_ground_state(int n_sites, double coupling, double total_field) {
  detail::check_sites(n_sites);
  const int n = n_sites;
  const std::uint32_t dim = 1u << n;

  std::vector<std::uint32_t> representative(dim);
  std::vector<int> orbit_size(dim, 0);
  std::vector<int> block_index(dim, -1);
  std::vector<std::uint32_t> reps;
  for (std::uint32_t s = 0; s < dim; ++s) {
    std::uint32_t rep = s;
    std::uint32_t t = s;
    int length = 1;
    for (t = detail::rotate(s, n); t != s; t = detail::rotate(t, n)) {
      rep = std::min(rep, t);
      ++length;
    }
    representative[s] = rep;
    orbit_size[s] = length;
    if (rep == s && std::popcount(s) % 2 == 0) {
      block_index[s] = static_cast<int>(reps.size());
      reps.push_back(s);
    }
  }

  const auto size = static_cast<Eigen::Index>(reps.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(size, size);
  for (Eigen::Index a = 0; a < size; ++a) {
    const std::uint32_t rep = reps[a];
    const double la = orbit_size[rep];
    std::uint32_t s = rep;
    do {
      detail::for_each_element(s, n, coupling, total_field, [&](std::uint32_t t, double amp) {
        const std::uint32_t c = representative[t];
        h(block_index[c], a) += amp / std::sqrt(la * orbit_size[c]);
      });
      s = detail::rotate(s, n);
    } while (s != rep);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("exact_ground_state: eigensolver failed");
  const Eigen::VectorXd ground = solver.eigenvectors().col(0);

  std::vector<double> full(dim, 0.0);
  for (std::uint32_t s = 0; s < dim; ++s) {
    const int b = block_index[representative[s]];
    if (b >= 0) full[s] = ground(b) / std::sqrt(static_cast<double>(orbit_size[s]));
  }
  return detail::normalized_real(n, full);
}

/// H |psi> on the full 2^N space.
inline DenseState apply_hamiltonian(const DenseState& state, double coupling, double total_field) {
  const int n = state.n_sites;
  DenseState out{n, std::vector<std::complex<double>>(state.amplitudes.size())};
  for (std::uint32_t s = 0; s < state.amplitudes.size(); ++s) {
    const auto a = state.amplitudes[s];
    if (a == 0.0) continue;
    detail::for_each_element(s, n, coupling, total_field, [&](std::uint32_t t, double amp) { out.amplitudes[t] += amp * a; });
  }
  return out;
}

/// <psi|H|psi> / <psi|psi>.
inline double energy(const DenseState& state, double coupling, double total_field) {
  const auto hpsi = apply_hamiltonian(state, coupling, total_field);
  std::complex<double> num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < state.amplitudes.size(); ++i) {
    num += std::conj(state.amplitudes[i]) * hpsi.amplitudes[i];
    den += std::norm(state.amplitudes[i]);
  }
  return num.real() / den;
}

/// Distribution of M_z over all N + 1 eigenvalues, indexed by the number of
/// down spins c (eigenvalue N/2 - c).
struct ExactMagnetizationPmf {
  int n_sites = 0;
  std::vector<double> probabilities;

  double outcome(std::size_t down) const { return 0.5 * n_sites - static_cast<double>(down); }
};

inline ExactMagnetizationPmf exact_magnetization_pmf(const DenseState& state) {
  ExactMagnetizationPmf out{state.n_sites, std::vector<double>(state.n_sites + 1, 0.0)};
  for (std::uint32_t s = 0; s < state.amplitudes.size(); ++s) out.probabilities[std::popcount(s)] += std::norm(state.amplitudes[s]);
  return out;
}

inline double exact_fidelity(const DenseState& a, const DenseState& b) {
  if (a.amplitudes.size() != b.amplitudes.size()) throw InputError("exact_fidelity: dimension mismatch");
  std::complex<double> overlap = 0.0;
  for (std::size_t i = 0; i < a.amplitudes.size(); ++i) overlap += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  return std::abs(overlap);
}

inline DenseState basis_state(int n_sites, std::uint32_t index) {
  if (n_sites < 1 || n_sites > kMaxSites) throw SizeError("basis_state: unsupported N");
  DenseState out{n_sites, std::vector<std::complex<double>>(std::size_t{1} << n_sites)};
  out.amplitudes.at(index) = 1.0;
  return out;
}

inline DenseState uniform_superposition(int n_sites) {
  if (n_sites < 1 || n_sites > kMaxSites) throw SizeError("uniform_superposition: unsupported N");
  const std::size_t dim = std::size_t{1} << n_sites;
  return DenseState{n_sites, std::vector<std::complex<double>>(dim, 1.0 / std::sqrt(static_cast<double>(dim)))};
}

}  // namespace critmetro::oracle

#endif  // CRITMETRO_ORACLE_HPP
