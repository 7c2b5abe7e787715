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

#ifndef CRITMETRO_ISING_HPP
#define CRITMETRO_ISING_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "critmetro/errors.hpp"
#include "critmetro/poisson_binomial.hpp"

namespace critmetro {

/**
  Periodic transverse-field Ising chain

      H = J sum_i sx_i sx_{i+1} + (h + s) sum_i sz_i

  solved by Jordan-Wigner + Fourier transform. Only the total field h + s
  enters the ground state. The chain is critical at total field = J.

  Positive momenta k_j = (2j + 1) pi / N, j = 0 .. N/2 - 1, pair with -k_j;
  cos k_j and sin k_j are cached.
*/
class IsingModel {
 public:
  IsingModel(int n_sites, double coupling) : n_sites_(n_sites), coupling_(coupling) {
    if (n_sites < 4 || n_sites % 2 != 0)
      throw ConfigError("IsingModel: n_sites must be even and >= 4 (got " + std::to_string(n_sites) + ")");
    if (!(coupling > 0.0) || !std::isfinite(coupling)) throw ConfigError("IsingModel: coupling J must be > 0");
    const int modes = n_sites / 2;
    cos_k_.resize(modes);
    sin_k_.resize(modes);
    for (int j = 0; j < modes; ++j) {
      const double k = momentum(j);
      cos_k_[j] = std::cos(k);
      sin_k_[j] = std::sin(k);
    }
  }

  int n_sites() const { return n_sites_; }
  double coupling() const { return coupling_; }
  int n_modes() const { return n_sites_ / 2; }
  double critical_field() const { return coupling_; }

  double momentum(int j) const { return (2.0 * j + 1.0) * std::numbers::pi / n_sites_; }
  std::span<const double> cos_k() const { return cos_k_; }
  std::span<const double> sin_k() const { return sin_k_; }

 private:
  int n_sites_;
  double coupling_;
  std::vector<double> cos_k_;
  std::vector<double> sin_k_;
};

/// One angle per positive momentum, each in [0, pi/2].
struct BogoliubovAngles {
  std::vector<double> angles;

  int n_sites() const { return 2 * static_cast<int>(angles.size()); }
};

/// theta_k = 1/2 arg(cos k - h/J + i sin k), i.e. cos 2 theta_k =
/// (cos k - h/J) / sqrt(1 - 2 (h/J) cos k + (h/J)^2), with h the total field.
inline BogoliubovAngles bogoliubov_angles(const IsingModel& model, double total_field) {
  if (!std::isfinite(total_field)) throw DomainError("bogoliubov_angles: non-finite field");
  const double r = total_field / model.coupling();
  BogoliubovAngles out;
  out.angles.resize(model.n_modes());
  for (int j = 0; j < model.n_modes(); ++j) {
    const double y = model.sin_k()[j];
    const double x = model.cos_k()[j] - r;
    assert(x != 0.0 || y != 0.0);
    out.angles[j] = 0.5 * std::atan2(y, x);
  }
  return out;
}

/// Pair-excitation probabilities sin^2 theta_k written without cancellation.
inline void pair_excitation_probabilities(const IsingModel& model, double total_field, std::span<double> out) {
  assert(out.size() == static_cast<std::size_t>(model.n_modes()));
  const double r = total_field / model.coupling();
  for (int j = 0; j < model.n_modes(); ++j) {
    const double a = model.cos_k()[j] - r;
    const double s = model.sin_k()[j];
    const double d = std::hypot(a, s);
    // 1 - cos 2 theta = (d - a) / d; for a > 0 use (d - a) = s^2 / (d + a).
    const double one_minus_c = a > 0.0 ? s * s / (d * (d + a)) : (d - a) / d;
    out[j] = 0.5 * one_minus_c;
  }
}

/**
  Outcome distribution of a projective M_z = 1/2 sum sz measurement on the
  ground state. Index m counts excited (k, -k) pairs; each pair flips two
  spins down from the fully polarized vacuum, so the outcome is
  x = N/2 - 2m. Odd flips have zero probability and are not stored.
*/
class MagnetizationPmf {
 public:
  MagnetizationPmf(int n_sites, std::vector<double> probabilities)
      : n_sites_(n_sites), probabilities_(std::move(probabilities)) {
    assert(probabilities_.size() == static_cast<std::size_t>(n_sites / 2 + 1));
  }

  int n_sites() const { return n_sites_; }
  std::size_t size() const { return probabilities_.size(); }
  std::span<const double> probabilities() const { return probabilities_; }
  double probability(std::size_t pairs) const { return probabilities_[pairs]; }
  double outcome(std::size_t pairs) const { return 0.5 * n_sites_ - 2.0 * static_cast<double>(pairs); }

  /// Probability of the outcome value x; 0 for values the ground state cannot produce.
  double probability_of(double x) const {
    const auto idx = index_of(x);
    return idx ? probabilities_[*idx] : 0.0;
  }

  /// Pair count for outcome x, if x is reachable.
  std::optional<std::size_t> index_of(double x) const { return pair_count(n_sites_, x); }

  static std::optional<std::size_t> pair_count(int n_sites, double x) {
    const double m = (0.5 * n_sites - x) / 2.0;
    const double r = std::round(m);
    if (std::fabs(m - r) > 1e-9 || r < 0.0 || r > 0.5 * n_sites) return std::nullopt;
    return static_cast<std::size_t>(r);
  }

 private:
  int n_sites_;
  std::vector<double> probabilities_;
};

inline MagnetizationPmf magnetization_pmf(const BogoliubovAngles& angles) {
  std::vector<double> p(angles.angles.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double s = std::sin(angles.angles[j]);
    p[j] = s * s;
  }
  return MagnetizationPmf(angles.n_sites(), poisson_binomial(p));
}

/// Same distribution evaluated directly from the field (no angles).
inline MagnetizationPmf magnetization_pmf(const IsingModel& model, double total_field) {
  std::vector<double> p(model.n_modes());
  pair_excitation_probabilities(model, total_field, p);
  return MagnetizationPmf(model.n_sites(), poisson_binomial(p));
}

/// Ground-state fidelity |<psi(field_1)|psi(field_2)>| = prod_k cos(theta_k(1) - theta_k(2)).
inline double fidelity(const IsingModel& model, double field_1, double field_2) {
  const auto a = bogoliubov_angles(model, field_1);
  const auto b = bogoliubov_angles(model, field_2);
  double f = 1.0;
  for (std::size_t j = 0; j < a.angles.size(); ++j) f *= std::cos(a.angles[j] - b.angles[j]);
  return f;
}

/**
  Exact quantum Fisher information of the ground state with respect to the
  field, x = h/J:

      F^Q = [ N^2/4 x^{N-2}/(x^N + 1)^2
              + N/4 (x^N - x^2) / (x^2 (x^2 - 1) (x^N + 1)) ] / J^2

  Equal to 4 sum_k (d theta_k / dh)^2. At x = 1 it takes the value
  N (N - 1) / (8 J^2). Near x = 1 the second term is evaluated as the finite
  geometric sum N/4 sum_{j=0}^{N/2-2} x^{2j} / (x^N + 1), which has no 0/0.
*/
inline double qfi_damski(const IsingModel& model, double total_field) {
  if (!(total_field > 0.0) || !std::isfinite(total_field)) throw DomainError("qfi_damski: field must be finite and > 0");
  const double n = model.n_sites();
  const double j = model.coupling();
  const double x = total_field / j;
  const double x2 = x * x;
  double t1 = 0.0;
  double t2 = 0.0;
  if (std::fabs(x - 1.0) < 1e-3) {
    const double xn = std::pow(x, n);
    t1 = 0.25 * n * n * std::pow(x, n - 2.0) / ((xn + 1.0) * (xn + 1.0));
    double geometric = 0.0;
    double power = 1.0;
    for (int k = 0; k <= model.n_modes() - 2; ++k) {
      geometric += power;
      power *= x2;
    }
    t2 = 0.25 * n * geometric / (xn + 1.0);
  } else if (x < 1.0) {
    const double xn = std::pow(x, n);
    t1 = 0.25 * n * n * std::pow(x, n - 2.0) / ((xn + 1.0) * (xn + 1.0));
    t2 = 0.25 * n * (xn - x2) / (x2 * (x2 - 1.0) * (xn + 1.0));
  } else {
    const double y = std::exp(-n * std::log(x));  // x^{-N}
    t1 = 0.25 * n * n * y / (x2 * (1.0 + y) * (1.0 + y));
    t2 = 0.25 * n * (1.0 - x2 * y) / (x2 * (x2 - 1.0) * (1.0 + y));
  }
  return (t1 + t2) / (j * j);
}

inline constexpr double kFisherStepFactor = 1e-4;  // central-difference step, units of J
inline constexpr double kFisherProbabilityFloor = 1e-15;

/// Classical Fisher information of the M_z measurement about the unknown
/// field, sum_x (d_h p)^2 / p, with d_h p by central differences of step `step`.
inline double classical_fisher_mz(const IsingModel& model, double unknown_field, double control_field, double step) {
  if (!(step > 0.0)) throw DomainError("classical_fisher_mz: step must be > 0");
  const double total = unknown_field + control_field;
  const auto centre = magnetization_pmf(model, total);
  const auto plus = magnetization_pmf(model, total + step);
  const auto minus = magnetization_pmf(model, total - step);
  double f = 0.0;
  for (std::size_t m = 0; m < centre.size(); ++m) {
    const double p = centre.probability(m);
    if (p < kFisherProbabilityFloor) continue;
    const double dp = (plus.probability(m) - minus.probability(m)) / (2.0 * step);
    f += dp * dp / p;
  }
  return f;
}

inline double classical_fisher_mz(const IsingModel& model, double unknown_field, double control_field) {
  return classical_fisher_mz(model, unknown_field, control_field, kFisherStepFactor * model.coupling());
}

/// Control field that puts the believed total field at the critical point J.
inline double critical_control(double field_estimate, double coupling) { return coupling - field_estimate; }

/**
  classical_fisher_mz tabulated against the total field on a uniform grid
  and read back by four-point Lagrange interpolation. Outside the table the
  direct finite-difference value is returned.
*/
class FisherTable {
 public:
  FisherTable(const IsingModel& model, double field_lo, double field_hi, std::size_t n_points)
      : lo_(field_lo), hi_(field_hi) {
    if (!(field_lo < field_hi) || n_points < 4) throw ConfigError("FisherTable: need lo < hi and at least 4 points");
    step_ = (hi_ - lo_) / static_cast<double>(n_points - 1);
    values_.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
      values_[i] = classical_fisher_mz(model, lo_ + static_cast<double>(i) * step_, 0.0);
  }

  double lower() const { return lo_; }
  double upper() const { return hi_; }
  std::size_t size() const { return values_.size(); }

  bool contains(double field) const { return field >= lo_ && field <= hi_; }

  double operator()(double field) const {
    const double u = (field - lo_) / step_;
    const auto last = static_cast<std::ptrdiff_t>(values_.size()) - 1;
    const auto i = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(u)) - 1, 0, last - 3);
    const double t = u - static_cast<double>(i);
    const double* y = values_.data() + i;
    // Nodes at t = 0, 1, 2, 3.
    const double l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    const double l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    const double l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    const double l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    return std::max(0.0, l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]);
  }

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
  double step_ = 0.0;
  std::vector<double> values_;
};

/// Measurement channel adaptor: unknown field h, control field s, outcome M_z.
class IsingChannel {
 public:
  explicit IsingChannel(IsingModel model) : model_(std::move(model)) {}

  /// Serve fisher() from a shared FisherTable where it covers the total field.
  IsingChannel(IsingModel model, std::shared_ptr<const FisherTable> table)
      : model_(std::move(model)), table_(std::move(table)) {}

  const IsingModel& model() const { return model_; }

  double control(double estimate) const { return critical_control(estimate, model_.coupling()); }

  template <class URBG>
  double sample(double lambda, double setting, URBG& rng) const {
    const auto pmf = magnetization_pmf(model_, lambda + setting);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cdf = 0.0;
    std::size_t pick = pmf.size() - 1;
    for (std::size_t m = 0; m < pmf.size(); ++m) {
      cdf += pmf.probability(m);
      if (u < cdf) {
        pick = m;
        break;
      }
    }
    while (pmf.probability(pick) <= 0.0 && pick > 0) --pick;
    return pmf.outcome(pick);
  }

  void likelihood(std::span<const double> lambdas, double setting, double outcome, std::span<double> out) const {
    const auto idx = MagnetizationPmf::pair_count(model_.n_sites(), outcome);
    if (!idx) {
      for (double& v : out) v = 0.0;
      return;
    }
    std::vector<double> q(model_.n_modes());
    std::vector<double> scratch;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      pair_excitation_probabilities(model_, lambdas[i] + setting, q);
      out[i] = poisson_binomial_at(q, *idx, scratch);
    }
  }

  void log_likelihood(std::span<const double> lambdas, double setting, double outcome, std::span<double> out) const {
    likelihood(lambdas, setting, outcome, out);
    for (double& v : out) v = v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
  }

  double fisher(double lambda, double setting) const {
    const double total = lambda + setting;
    if (table_ && table_->contains(total)) return (*table_)(total);
    return classical_fisher_mz(model_, lambda, setting);
  }

  const FisherTable* fisher_table() const { return table_.get(); }

 private:
  IsingModel model_;
  std::shared_ptr<const FisherTable> table_;
};

}  // namespace critmetro

#endif  // CRITMETRO_ISING_HPP
