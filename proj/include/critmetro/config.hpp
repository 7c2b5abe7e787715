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

#ifndef CRITMETRO_CONFIG_HPP
#define CRITMETRO_CONFIG_HPP

// Experiment configuration: a TOML subset (sections, `key = value`, quoted
// strings, integers, floats, booleans, single-line arrays, `#` comments)
// and the typed ExperimentConfig built from it. Unknown sections and keys
// are errors.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "critmetro/bosehubbard.hpp"
#include "critmetro/errors.hpp"
#include "critmetro/priors.hpp"

namespace critmetro {

using ConfigScalar = std::variant<bool, std::int64_t, double, std::string>;
using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<ConfigScalar>>;

/// section -> key -> value. Keys before the first header live in section "".
using ConfigTable = std::map<std::string, std::map<std::string, ConfigValue>>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline ConfigError parse_error(std::size_t line, const std::string& what) {
  return ConfigError("config line " + std::to_string(line) + ": " + what);
}

// Strips a trailing comment, respecting quoted strings.
inline std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

inline ConfigScalar parse_scalar(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text.empty()) throw parse_error(line, "missing value");
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') throw parse_error(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      char c = text[i];
      if (c == '\\') {
        if (i + 2 >= text.size()) throw parse_error(line, "dangling escape");
        c = text[++i];
        if (c == 'n') c = '\n';
        else if (c == 't') c = '\t';
        else if (c != '"' && c != '\\') throw parse_error(line, std::string("unknown escape \\") + c);
      }
      out.push_back(c);
    }
    return out;
  }
  std::string digits;
  for (char c : text)
    if (c != '_') digits.push_back(c);
  const bool looks_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "-inf" ||
                           digits == "+inf" || digits == "nan";
  const char* first = digits.data();
  const char* last = digits.data() + digits.size();
  if (*first == '+') ++first;
  if (!looks_float) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && ptr == last) return v;
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw parse_error(line, "cannot parse value '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string_view> split_array(std::string_view body, std::size_t line) {
  std::vector<std::string_view> items;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i < body.size() && body[i] == '"' && (i == 0 || body[i - 1] != '\\')) quoted = !quoted;
    if (i == body.size() || (body[i] == ',' && !quoted)) {
      const auto item = trim(body.substr(start, i - start));
      if (item.empty() && i != body.size()) throw parse_error(line, "empty array element");
      if (!item.empty()) items.push_back(item);
      start = i + 1;
    }
  }
  if (quoted) throw parse_error(line, "unterminated string in array");
  return items;
}

inline ConfigValue parse_value(std::string_view text, std::size_t line) {
  text = trim(text);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw parse_error(line, "arrays must open and close on one line");
    std::vector<ConfigScalar> out;
    for (auto item : split_array(text.substr(1, text.size() - 2), line)) out.push_back(parse_scalar(item, line));
    return out;
  }
  return std::visit([](auto&& v) -> ConfigValue { return v; }, parse_scalar(text, line));
}

}  // namespace detail

inline ConfigTable parse_config(std::istream& in) {
  ConfigTable table;
  std::string section;
  table[section];
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = detail::trim(detail::strip_comment(raw));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw detail::parse_error(line, "malformed section header");
      section = std::string(detail::trim(text.substr(1, text.size() - 2)));
      if (!detail::valid_key(section)) throw detail::parse_error(line, "bad section name");
      table[section];
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw detail::parse_error(line, "expected key = value");
    const std::string key(detail::trim(text.substr(0, eq)));
    if (!detail::valid_key(key)) throw detail::parse_error(line, "bad key '" + key + "'");
    auto& entries = table[section];
    if (entries.contains(key)) throw detail::parse_error(line, "duplicate key '" + key + "'");
    entries.emplace(key, detail::parse_value(text.substr(eq + 1), line));
  }
  return table;
}

inline ConfigTable parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ConfigTable parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

enum class ModelKind { ising, bosehubbard };

struct StrategyConfig {
  std::string name = "realtime";
  std::optional<double> s0;
  double threshold_coeff = 3.0;
  std::optional<double> epsilon;
  std::optional<double> control_min;
  std::optional<double> control_max;
};

struct BoseHubbardConfig {
  std::string g_form = "logistic";
  std::string g_table_path;
  double sigma0 = 0.1;
  double critical_ratio = 0.06;
  double nu = 0.67;
  double logistic_amplitude = 1.0;
  double logistic_width = 1.0;
  int savgol_window = 11;
  int savgol_order = 3;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::ising;
  std::uint64_t master_seed = 1;
  int jobs = 1;
  std::string output_dir = "results";

  BesselPrior prior;
  std::uint64_t grid_points = kDefaultGridPoints;

  double coupling = 1.0;
  BoseHubbardConfig bosehubbard;
  StrategyConfig strategy;

  // simulate
  std::vector<int> n_list{16, 24, 32, 48, 64};
  int m = 24;
  std::vector<int> m_list{0, 2, 4, 8, 16, 24, 32, 48};
  int m_sweep_n = 40;
  std::uint64_t n_traj = 2000;
  double max_failure_rate = 0.01;

  // fisher
  std::vector<int> fisher_n_list{16, 32, 64, 128};
  double field_min = 0.5;
  double field_max = 1.5;
  int field_points = 201;

  // pmf
  int pmf_n_sites = 8;
  double pmf_field = 1.0;

  // bounds
  std::vector<int> bounds_n_list{16, 24, 32, 48, 64};
  std::vector<int> bounds_fit_n_list{16, 32, 64, 128};
  int bounds_fit_points = 4001;
  std::optional<double> dnu;

  // oracle
  int oracle_n_sites = 8;
  double oracle_field = 1.0;

  /// d*nu used by the two-step threshold and the bound fits: 1 for the
  /// Ising chain, 1/nu for the stiffness surrogate (peak width ~ N^{-nu}).
  double effective_dnu() const {
    if (dnu) return *dnu;
    return model == ModelKind::ising ? 1.0 : 1.0 / bosehubbard.nu;
  }

  void validate() const;
};

namespace detail {

class SectionReader {
 public:
  SectionReader(const ConfigTable& table, const std::string& section) : section_(section) {
    if (const auto it = table.find(section); it != table.end()) entries_ = &it->second;
  }

  SectionReader(const SectionReader&) = delete;
  SectionReader& operator=(const SectionReader&) = delete;

  /// Rejects keys of this section that were never read.
  void finish() const {
    if (!entries_) return;
    for (const auto& [key, value] : *entries_)
      if (!seen_.contains(key)) throw ConfigError("unknown key '" + key + "' in section [" + section_ + "]");
  }

  void read(const std::string& key, double& out) { get(key, out); }
  void read(const std::string& key, int& out) { get(key, out); }
  void read(const std::string& key, std::uint64_t& out) { get(key, out); }
  void read(const std::string& key, bool& out) { get(key, out); }
  void read(const std::string& key, std::string& out) { get(key, out); }
  void read(const std::string& key, std::optional<double>& out) {
    double v = 0.0;
    if (get(key, v)) out = v;
  }
  void read(const std::string& key, std::vector<int>& out) {
    const auto* v = find(key);
    if (!v) return;
    const auto* list = std::get_if<std::vector<ConfigScalar>>(v);
    if (!list) throw error(key, "expected an array of integers");
    out.clear();
    for (const auto& item : *list) {
      const auto* i = std::get_if<std::int64_t>(&item);
      if (!i || *i < std::numeric_limits<int>::min() || *i > std::numeric_limits<int>::max())
        throw error(key, "expected an array of integers");
      out.push_back(static_cast<int>(*i));
    }
  }

 private:
  const ConfigValue* find(const std::string& key) {
    if (!entries_) return nullptr;
    const auto it = entries_->find(key);
    if (it == entries_->end()) return nullptr;
    seen_.insert(key);
    return &it->second;
  }

  ConfigError error(const std::string& key, const std::string& what) const {
    return ConfigError("[" + section_ + "] " + key + ": " + what);
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    const auto* v = find(key);
    if (!v) return false;
    if constexpr (std::is_same_v<T, double>) {
      if (const auto* d = std::get_if<double>(v)) out = *d;
      else if (const auto* i = std::get_if<std::int64_t>(v)) out = static_cast<double>(*i);
      else throw error(key, "expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      const auto* b = std::get_if<bool>(v);
      if (!b) throw error(key, "expected true or false");
      out = *b;
    } else if constexpr (std::is_same_v<T, std::string>) {
      const auto* s = std::get_if<std::string>(v);
      if (!s) throw error(key, "expected a quoted string");
      out = *s;
    } else {
      const auto* i = std::get_if<std::int64_t>(v);
      if (!i) throw error(key, "expected an integer");
      if (*i < 0 && !std::is_signed_v<T>) throw error(key, "must be non-negative");
      if constexpr (std::is_same_v<T, int>) {
        if (*i < std::numeric_limits<int>::min() || *i > std::numeric_limits<int>::max())
          throw error(key, "out of range");
      }
      out = static_cast<T>(*i);
    }
    return true;
  }

  std::string section_;
  const std::map<std::string, ConfigValue>* entries_ = nullptr;
  std::set<std::string> seen_;
};

inline void check_n_list(const std::vector<int>& ns, const char* what) {
  if (ns.empty()) throw ConfigError(std::string(what) + " must not be empty");
  for (int n : ns)
    if (n < 1) throw ConfigError(std::string(what) + " entries must be positive");
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  prior.validate();
  if (grid_points < kMinGridPoints) throw ConfigError("[prior] n_points must be >= 16");
  if (jobs < 1) throw ConfigError("[experiment] jobs must be >= 1");
  if (!(coupling > 0.0)) throw ConfigError("[ising] coupling must be > 0");
  if (strategy.name != "nonadaptive" && strategy.name != "twostep" && strategy.name != "realtime")
    throw ConfigError("[strategy] strategy must be \"nonadaptive\", \"twostep\" or \"realtime\"");
  if (!(strategy.threshold_coeff > 0.0)) throw ConfigError("[strategy] threshold_coeff must be > 0");
  if (strategy.epsilon && !(*strategy.epsilon > 0.0 && *strategy.epsilon < 1.0))
    throw ConfigError("[strategy] epsilon must lie in (0, 1)");
  if (strategy.control_min && strategy.control_max && !(*strategy.control_min <= *strategy.control_max))
    throw ConfigError("[strategy] control_min must not exceed control_max");
  if (bosehubbard.g_form != "logistic" && bosehubbard.g_form != "table")
    throw ConfigError("[bosehubbard] g_form must be \"logistic\" or \"table\"");
  if (bosehubbard.g_form == "table" && bosehubbard.g_table_path.empty())
    throw ConfigError("[bosehubbard] g_form = \"table\" needs g_table_path");
  if (!(bosehubbard.sigma0 > 0.0)) throw ConfigError("[bosehubbard] sigma0 must be > 0");
  if (!(bosehubbard.critical_ratio > 0.0)) throw ConfigError("[bosehubbard] critical_ratio must be > 0");
  if (!(bosehubbard.nu > 0.0)) throw ConfigError("[bosehubbard] nu must be > 0");
  if (!(bosehubbard.logistic_amplitude > 0.0 && bosehubbard.logistic_width > 0.0))
    throw ConfigError("[bosehubbard] logistic_amplitude and logistic_width must be > 0");
  detail::check_n_list(n_list, "[simulate] n_list");
  detail::check_n_list(fisher_n_list, "[fisher] n_list");
  detail::check_n_list(bounds_n_list, "[bounds] n_list");
  detail::check_n_list(bounds_fit_n_list, "[bounds] fit_n_list");
  if (model == ModelKind::ising) {
    for (const auto* list : {&n_list, &fisher_n_list, &bounds_n_list, &bounds_fit_n_list})
      for (int n : *list)
        if (n < 4 || n % 2 != 0) throw ConfigError("Ising chain sizes must be even and >= 4");
    if (m_sweep_n < 4 || m_sweep_n % 2 != 0) throw ConfigError("[simulate] m_sweep_n must be even and >= 4");
  }
  if (m < 1) throw ConfigError("[simulate] m must be >= 1");
  if (m_list.empty()) throw ConfigError("[simulate] m_list must not be empty");
  for (int v : m_list)
    if (v < 0) throw ConfigError("[simulate] m_list entries must be >= 0");
  if (n_traj < 2) throw ConfigError("[simulate] n_traj must be >= 2");
  if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) throw ConfigError("[simulate] max_failure_rate must lie in [0, 1]");
  if (!(field_min < field_max) || field_points < 2) throw ConfigError("[fisher] need field_min < field_max and field_points >= 2");
  if (pmf_n_sites < 4 || pmf_n_sites % 2 != 0) throw ConfigError("[pmf] n_sites must be even and >= 4");
  if (bounds_fit_points < 16) throw ConfigError("[bounds] fit_points must be >= 16");
  if (bounds_fit_n_list.size() < 3) throw ConfigError("[bounds] fit_n_list needs at least 3 sizes");
  if (dnu && !(*dnu > 0.0)) throw ConfigError("[bounds] dnu must be > 0");
}

inline ExperimentConfig experiment_config(const ConfigTable& table) {
  static const std::set<std::string> sections{"",         "experiment", "prior",  "ising",  "bosehubbard",
                                              "strategy", "simulate",   "fisher", "bounds", "pmf",
                                              "oracle"};
  for (const auto& [name, entries] : table)
    if (!sections.contains(name)) throw ConfigError("unknown section [" + name + "]");

  ExperimentConfig c;
  detail::SectionReader(table, "").finish();
  {
    detail::SectionReader r(table, "experiment");
    std::string model = "ising";
    r.read("model", model);
    if (model == "ising") c.model = ModelKind::ising;
    else if (model == "bosehubbard") c.model = ModelKind::bosehubbard;
    else throw ConfigError("[experiment] model must be \"ising\" or \"bosehubbard\"");
    r.read("master_seed", c.master_seed);
    r.read("jobs", c.jobs);
    r.read("output_dir", c.output_dir);
    r.finish();
  }
  {
    detail::SectionReader r(table, "prior");
    r.read("alpha", c.prior.alpha);
    r.read("lambda_min", c.prior.lambda_min);
    r.read("lambda_max", c.prior.lambda_max);
    r.read("n_points", c.grid_points);
    r.finish();
  }
  {
    detail::SectionReader r(table, "ising");
    r.read("coupling", c.coupling);
    r.finish();
  }
  {
    detail::SectionReader r(table, "bosehubbard");
    auto& b = c.bosehubbard;
    r.read("g_form", b.g_form);
    r.read("g_table_path", b.g_table_path);
    r.read("sigma0", b.sigma0);
    r.read("critical_ratio", b.critical_ratio);
    r.read("nu", b.nu);
    r.read("logistic_amplitude", b.logistic_amplitude);
    r.read("logistic_width", b.logistic_width);
    r.read("savgol_window", b.savgol_window);
    r.read("savgol_order", b.savgol_order);
    r.finish();
  }
  {
    detail::SectionReader r(table, "strategy");
    auto& s = c.strategy;
    r.read("strategy", s.name);
    r.read("s0", s.s0);
    r.read("threshold_coeff", s.threshold_coeff);
    r.read("epsilon", s.epsilon);
    r.read("control_min", s.control_min);
    r.read("control_max", s.control_max);
    r.finish();
  }
  {
    detail::SectionReader r(table, "simulate");
    r.read("n_list", c.n_list);
    r.read("m", c.m);
    r.read("m_list", c.m_list);
    r.read("m_sweep_n", c.m_sweep_n);
    r.read("n_traj", c.n_traj);
    r.read("max_failure_rate", c.max_failure_rate);
    r.finish();
  }
  {
    detail::SectionReader r(table, "fisher");
    r.read("n_list", c.fisher_n_list);
    r.read("field_min", c.field_min);
    r.read("field_max", c.field_max);
    r.read("field_points", c.field_points);
    r.finish();
  }
  {
    detail::SectionReader r(table, "pmf");
    r.read("n_sites", c.pmf_n_sites);
    r.read("field", c.pmf_field);
    r.finish();
  }
  {
    detail::SectionReader r(table, "bounds");
    r.read("n_list", c.bounds_n_list);
    r.read("fit_n_list", c.bounds_fit_n_list);
    r.read("fit_points", c.bounds_fit_points);
    r.read("dnu", c.dnu);
    r.finish();
  }
  {
    detail::SectionReader r(table, "oracle");
    r.read("n_sites", c.oracle_n_sites);
    r.read("field", c.oracle_field);
    r.finish();
  }
  c.validate();
  return c;
}

}  // namespace critmetro

#endif  // CRITMETRO_CONFIG_HPP
