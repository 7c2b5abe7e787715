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

#ifndef CRITMETRO_BOSEHUBBARD_HPP
#define CRITMETRO_BOSEHUBBARD_HPP

// Surrogate superfluid-stiffness measurement for the 2D Bose-Hubbard model.
// The stiffness follows the finite-size scaling form
//     rho_s(t; U) = N^{-1/2} g((t - r U) N^nu),
// and a measurement returns rho_s plus Gaussian noise of variance sigma0^2 / N.
// The universal function g is either a logistic stand-in or a table.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "critmetro/errors.hpp"

namespace critmetro {

/**
  Savitzky-Golay first derivative: least-squares polynomial of degree
  `order` over `window` consecutive samples, differentiated at each sample.
  Windows are centred where possible and shifted inwards (one-sided) near
  the ends. Requires uniformly spaced x.
*/
inline std::vector<double> savgol_derivative(std::span<const double> x, std::span<const double> y, int window, int order) {
  if (x.size() != y.size()) throw InputError("savgol_derivative: x and y differ in length");
  if (window < 1 || window % 2 == 0) throw InputError("savgol_derivative: window must be odd");
  if (order < 1 || window <= order) throw InputError("savgol_derivative: need 1 <= order < window");
  const auto n = static_cast<int>(x.size());
  if (n < window) throw InputError("savgol_derivative: fewer samples than the window");
  const double h = (x[n - 1] - x[0]) / (n - 1);
  if (!(h > 0.0)) throw InputError("savgol_derivative: x must be increasing");
  for (int i = 1; i < n; ++i)
    if (std::fabs((x[i] - x[i - 1]) - h) > 1e-9 * std::max(1.0, std::fabs(h)))
      throw InputError("savgol_derivative: x is not uniformly spaced");

  const int half = window / 2;
  std::vector<double> out(n);
  // Filter weights depend only on where the evaluation point sits inside the window.
  std::map<int, Eigen::VectorXd> weights_by_offset;
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - half, 0, n - window);
    const int offset = i - start;
    auto it = weights_by_offset.find(offset);
    if (it == weights_by_offset.end()) {
      Eigen::MatrixXd v(window, order + 1);
      for (int r = 0; r < window; ++r) {
        const double u = r - offset;
        double p = 1.0;
        for (int c = 0; c <= order; ++c) {
          v(r, c) = p;
          p *= u;
        }
      }
      // Row 1 of the pseudo-inverse maps samples to the linear coefficient.
      const Eigen::MatrixXd pinv = v.householderQr().solve(Eigen::MatrixXd::Identity(window, window));
      it = weights_by_offset.emplace(offset, pinv.row(1).transpose()).first;
    }
    double d = 0.0;
    for (int r = 0; r < window; ++r) d += it->second(r) * y[start + r];
    out[i] = d / h;
  }
  return out;
}

/// g(y) = a / (1 + exp(y / w)): decreasing, saturating at a (superfluid) and 0 (insulator).
struct LogisticScaling {
  double amplitude = 1.0;
  double width = 1.0;

  double value(double y) const {
    const double z = y / width;
    return z > 0.0 ? amplitude * std::exp(-z) / (1.0 + std::exp(-z)) : amplitude / (1.0 + std::exp(z));
  }
  double derivative(double y) const {
    const double e = std::exp(-std::fabs(y / width));
    return -amplitude / width * e / ((1.0 + e) * (1.0 + e));
  }
};

/**
  g sampled on a uniform y grid. Values are linearly interpolated and held
  constant beyond the ends; derivatives come from a Savitzky-Golay filter of
  the samples and only exist inside the tabulated range.
*/
class TabulatedScaling {
 public:
  TabulatedScaling(double y_first, double y_step, std::vector<double> values, int window = 11, int order = 3)
      : y_first_(y_first), y_step_(y_step), values_(std::move(values)) {
    if (!(y_step_ > 0.0)) throw ConfigError("TabulatedScaling: y step must be > 0");
    if (values_.size() < 2) throw ConfigError("TabulatedScaling: need at least 2 samples");
    const double scale = *std::max_element(values_.begin(), values_.end());
    for (std::size_t i = 1; i < values_.size(); ++i)
      if (values_[i] > values_[i - 1] + 1e-12 * std::max(1.0, scale))
        throw ConfigError("TabulatedScaling: g must be non-increasing in y");
    std::vector<double> ys(values_.size());
    for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = y_at(i);
    window = std::min<int>(window, static_cast<int>(values_.size()) - (values_.size() % 2 == 0 ? 1 : 0));
    derivatives_ = savgol_derivative(ys, values_, window, std::min(order, window - 1));
  }

  double y_first() const { return y_first_; }
  double y_last() const { return y_at(values_.size() - 1); }
  double y_step() const { return y_step_; }
  double y_at(std::size_t i) const { return y_first_ + static_cast<double>(i) * y_step_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> derivatives() const { return derivatives_; }

  double value(double y) const { return interpolate(values_, std::clamp(y, y_first(), y_last())); }

  double derivative(double y) const {
    if (y < y_first() - 1e-12 * y_step_ || y > y_last() + 1e-12 * y_step_)
      throw RangeError("TabulatedScaling: y outside the tabulated derivative range");
    return interpolate(derivatives_, std::clamp(y, y_first(), y_last()));
  }

 private:
  double interpolate(const std::vector<double>& table, double y) const {
    const double pos = (y - y_first_) / y_step_;
    const auto last = values_.size() - 1;
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= last) return table[last];
    const double t = pos - static_cast<double>(i);
    return table[i] + t * (table[i + 1] - table[i]);
  }

  double y_first_;
  double y_step_;
  std::vector<double> values_;
  std::vector<double> derivatives_;
};

using ScalingFunction = std::variant<LogisticScaling, TabulatedScaling>;

struct StiffnessModel {
  double critical_ratio = 0.06;  // t_c = critical_ratio * U
  double nu = 0.67;
  int n_sites = 16;
  double sigma0 = 0.1;
  ScalingFunction g = LogisticScaling{};
  double chem_potential = 0.5;  // metadata only

  void validate() const {
    if (!(critical_ratio > 0.0)) throw ConfigError("StiffnessModel: critical_ratio must be > 0");
    if (!(nu > 0.0)) throw ConfigError("StiffnessModel: nu must be > 0");
    if (!(sigma0 > 0.0)) throw ConfigError("StiffnessModel: sigma0 must be > 0");
    if (n_sites < 1) throw ConfigError("StiffnessModel: n_sites must be >= 1");
  }

  double scaled_variable(double t, double u) const { return (t - critical_ratio * u) * std::pow(n_sites, nu); }

  double g_value(double y) const {
    return std::visit([y](const auto& f) { return f.value(y); }, g);
  }
  double g_derivative(double y) const {
    return std::visit([y](const auto& f) { return f.derivative(y); }, g);
  }
};

inline double stiffness(const StiffnessModel& model, double t, double u) {
  if (!(u > 0.0)) throw DomainError("stiffness: U must be > 0");
  return model.g_value(model.scaled_variable(t, u)) / std::sqrt(static_cast<double>(model.n_sites));
}

/// d rho_s / d t = N^{nu - 1/2} g'(y). Throws RangeError outside a tabulated g.
inline double stiffness_derivative(const StiffnessModel& model, double t, double u) {
  if (!(u > 0.0)) throw DomainError("stiffness_derivative: U must be > 0");
  return std::pow(model.n_sites, model.nu - 0.5) * model.g_derivative(model.scaled_variable(t, u));
}

inline double measurement_std(const StiffnessModel& model) { return model.sigma0 / std::sqrt(static_cast<double>(model.n_sites)); }

/// Gaussian outcome density with mean rho_s(t; U) and variance sigma0^2 / N.
inline double stiffness_likelihood(const StiffnessModel& model, double x, double t, double u) {
  const double sd = measurement_std(model);
  const double z = (x - stiffness(model, t, u)) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

template <class URBG>
double sample_stiffness_measurement(const StiffnessModel& model, double t, double u, URBG& rng) {
  std::normal_distribution<double> noise(stiffness(model, t, u), measurement_std(model));
  return noise(rng);
}

/// Fisher information about t: (N / sigma0^2) (d rho_s / d t)^2.
inline double fisher_hopping(const StiffnessModel& model, double t, double u) {
  const double d = stiffness_derivative(model, t, u);
  return model.n_sites / (model.sigma0 * model.sigma0) * d * d;
}

/// U that places the believed hopping at the critical point: U = t~ / r.
inline double critical_control_bh(double t_estimate, const StiffnessModel& model) {
  if (!(t_estimate > 0.0)) throw DomainError("critical_control_bh: estimate must be > 0");
  return t_estimate / model.critical_ratio;
}

struct StiffnessRow {
  double t_over_u = 0.0;
  int n = 0;
  double rho_s = 0.0;
};

struct StiffnessTable {
  std::vector<StiffnessRow> rows;

  void validate() const {
    std::set<std::pair<double, int>> keys;
    for (const auto& r : rows) {
      if (!(r.rho_s >= 0.0)) throw InputError("StiffnessTable: rho_s must be >= 0");
      if (r.n < 1) throw InputError("StiffnessTable: N must be >= 1");
      if (!keys.emplace(r.t_over_u, r.n).second) throw InputError("StiffnessTable: duplicate (t_over_U, N) row");
    }
  }
};

namespace detail {

inline double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw InputError("stiffness CSV line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  return v;
}

}  // namespace detail

inline constexpr std::string_view kStiffnessCsvHeader = "t_over_U,N,rho_s";

/// Reads `t_over_U,N,rho_s` CSV (decimal point, no locale formatting).
inline StiffnessTable read_stiffness_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("stiffness CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kStiffnessCsvHeader) throw InputError("stiffness CSV: header must be '" + std::string(kStiffnessCsvHeader) + "'");
  StiffnessTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view view(line);
    const auto c1 = view.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
    if (c2 == std::string_view::npos || view.find(',', c2 + 1) != std::string_view::npos)
      throw InputError("stiffness CSV line " + std::to_string(lineno) + ": expected 3 fields");
    StiffnessRow row;
    row.t_over_u = detail::parse_double(view.substr(0, c1), lineno);
    const double n = detail::parse_double(view.substr(c1 + 1, c2 - c1 - 1), lineno);
    if (n != std::floor(n)) throw InputError("stiffness CSV line " + std::to_string(lineno) + ": N must be an integer");
    row.n = static_cast<int>(n);
    row.rho_s = detail::parse_double(view.substr(c2 + 1), lineno);
    table.rows.push_back(row);
  }
  table.validate();
  return table;
}

inline StiffnessTable read_stiffness_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("stiffness CSV: cannot open '" + path + "'");
  return read_stiffness_csv(in);
}

/**
  Collapse a stiffness table onto the universal curve: y = (t/U - r) N^nu,
  g = rho_s sqrt(N) (the table is read as U = 1). A single-N table on a
  uniform t/U grid is used node for node; anything else is resampled onto
  `n_points` uniform y nodes by linear interpolation of the merged points.
*/
inline TabulatedScaling scaling_function_from_table(const StiffnessTable& table, double critical_ratio, double nu,
                                                    int window = 11, int order = 3, int n_points = 201) {
  table.validate();
  if (table.rows.size() < 2) throw InputError("scaling_function_from_table: need at least 2 rows");
  std::vector<std::pair<double, double>> pts;
  std::set<int> sizes;
  for (const auto& r : table.rows) {
    sizes.insert(r.n);
    pts.emplace_back((r.t_over_u - critical_ratio) * std::pow(r.n, nu), r.rho_s * std::sqrt(static_cast<double>(r.n)));
  }
  std::sort(pts.begin(), pts.end());

  if (sizes.size() == 1) {
    const double step = (pts.back().first - pts.front().first) / static_cast<double>(pts.size() - 1);
    bool uniform = step > 0.0;
    for (std::size_t i = 1; i < pts.size() && uniform; ++i)
      uniform = std::fabs(pts[i].first - pts[i - 1].first - step) <= 1e-9 * std::max(1.0, step);
    if (uniform) {
      std::vector<double> values;
      for (const auto& p : pts) values.push_back(p.second);
      return TabulatedScaling(pts.front().first, step, std::move(values), window, order);
    }
  }

  // Merge coincident y values, then resample.
  std::vector<std::pair<double, double>> merged;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < pts.size() && pts[j].first == pts[i].first) sum += pts[j++].second;
    merged.emplace_back(pts[i].first, sum / static_cast<double>(j - i));
    i = j;
  }
  if (merged.size() < 2 || n_points < 2) throw InputError("scaling_function_from_table: not enough distinct points");
  const double y0 = merged.front().first;
  const double step = (merged.back().first - y0) / (n_points - 1);
  std::vector<double> values(n_points);
  std::size_t k = 0;
  for (int i = 0; i < n_points; ++i) {
    const double y = i + 1 == n_points ? merged.back().first : y0 + i * step;
    while (k + 2 < merged.size() && merged[k + 1].first < y) ++k;
    const auto& a = merged[k];
    const auto& b = merged[k + 1];
    const double t = std::clamp((y - a.first) / (b.first - a.first), 0.0, 1.0);
    values[i] = a.second + t * (b.second - a.second);
  }
  return TabulatedScaling(y0, step, std::move(values), window, order);
}

/// Measurement channel adaptor: unknown hopping t, control U, outcome rho_s estimate.
class BoseHubbardChannel {
 public:
  explicit BoseHubbardChannel(StiffnessModel model) : model_(std::move(model)) { model_.validate(); }

  const StiffnessModel& model() const { return model_; }

  double control(double estimate) const { return critical_control_bh(estimate, model_); }

  template <class URBG>
  double sample(double lambda, double setting, URBG& rng) const {
    return sample_stiffness_measurement(model_, lambda, setting, rng);
  }

  void likelihood(std::span<const double> lambdas, double setting, double outcome, std::span<double> out) const {
    for (std::size_t i = 0; i < lambdas.size(); ++i) out[i] = stiffness_likelihood(model_, outcome, lambdas[i], setting);
  }

  void log_likelihood(std::span<const double> lambdas, double setting, double outcome, std::span<double> out) const {
    const double sd = measurement_std(model_);
    const double log_norm = -std::log(sd * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      const double z = (outcome - stiffness(model_, lambdas[i], setting)) / sd;
      out[i] = log_norm - 0.5 * z * z;
    }
  }

  /// Fisher information of the clamped surrogate: zero where a tabulated g is flat.
  double fisher(double lambda, double setting) const {
    try {
      return fisher_hopping(model_, lambda, setting);
    } catch (const RangeError&) {
      return 0.0;
    }
  }

 private:
  StiffnessModel model_;
};

}  // namespace critmetro

#endif  // CRITMETRO_BOSEHUBBARD_HPP
