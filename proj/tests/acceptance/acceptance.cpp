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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "critmetro/bosehubbard.hpp"
#include "critmetro/commands.hpp"
#include "critmetro/config.hpp"
#include "critmetro/inference.hpp"
#include "critmetro/ising.hpp"
#include "critmetro/oracle.hpp"
#include "critmetro/simulator.hpp"

namespace {

using namespace critmetro;
namespace fs = std::filesystem;

const std::string kCli = CRITMETRO_CLI_PATH;
const std::string kConfigs = CRITMETRO_CONFIG_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

ExperimentConfig load(const std::string& name) { return experiment_config(parse_config_file(kConfigs + "/" + name)); }

double fit_exponent(const std::vector<std::pair<double, double>>& pts) { return scaling_fit(pts).exponent; }

// Exact-diagonalization QFI: Richardson-extrapolated 8 (1 - F(h - d, h + d)) / (2 d)^2.
double exact_qfi(int n, double j, double h) {
  auto at = [&](double d) {
    const auto a = oracle::exact_ground_state(n, j, h - d);
    const auto b = oracle::exact_ground_state(n, j, h + d);
    return 8.0 * (1.0 - oracle::exact_fidelity(a, b)) / (4.0 * d * d);
  };
  const double d = 2e-3 * j;
  return (4.0 * at(0.5 * d) - at(d)) / 3.0;
}

Verdict criterion_1() {
  std::mt19937_64 rng(20260101);
  const double j = 1.0;
  std::uniform_real_distribution<double> field(0.3 * j, 1.7 * j);
  double pmf_err = 0.0, fid_err = 0.0, qfi_err = 0.0;
  for (int n = 4; n <= 12; n += 2) {
    const IsingModel model(n, j);
    for (int i = 0; i < 20; ++i) {
      const double h = field(rng);
      const double h2 = field(rng);
      const auto psi = oracle::exact_ground_state(n, j, h);
      const auto exact = oracle::exact_magnetization_pmf(psi);
      const auto analytic = magnetization_pmf(model, h);
      for (std::size_t down = 0; down < exact.probabilities.size(); ++down) {
        const double x = exact.outcome(down);
        pmf_err = std::max(pmf_err, std::fabs(exact.probabilities[down] - analytic.probability_of(x)));
      }
      const double f_exact = oracle::exact_fidelity(psi, oracle::exact_ground_state(n, j, h2));
      fid_err = std::max(fid_err, std::fabs(f_exact - std::fabs(fidelity(model, h, h2))));
      const double q = qfi_damski(model, h);
      qfi_err = std::max(qfi_err, std::fabs(exact_qfi(n, j, h) - q) / q);
    }
  }
  return {pmf_err < 1e-10 && fid_err < 1e-9 && qfi_err < 1e-3,
          "max |pmf err| " + fmt(pmf_err) + " (< 1e-10), max |fidelity err| " + fmt(fid_err) +
              " (< 1e-9), max QFI rel err " + fmt(qfi_err) + " (< 1e-3)"};
}

Verdict criterion_2() {
  std::vector<std::pair<double, double>> pts;
  for (int n : {16, 32, 64, 128, 256}) pts.emplace_back(n, qfi_damski(IsingModel(n, 1.0), 1.0));
  const double e = fit_exponent(pts);
  return {std::fabs(e - 2.0) <= 0.05, "QFI exponent " + fmt(e, 5) + " (target 2.00 +/- 0.05)"};
}

// Maximum over the total field of the M_z Fisher information: grid scan, then golden section.
double peak_classical_fisher(int n) {
  const IsingModel model(n, 1.0);
  auto f = [&](double h) { return classical_fisher_mz(model, h, 0.0); };
  double best_h = 0.5, best = -1.0;
  const double step = 0.2 / n;
  for (double h = 0.5; h <= 1.5; h += step) {
    const double v = f(h);
    if (v > best) best = v, best_h = h;
  }
  double a = best_h - step, b = best_h + step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60; ++it) {
    if (fc > fd) {
      b = d, d = c, fd = fc;
      c = b - g * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + g * (b - a), fd = f(d);
    }
  }
  return std::max({best, fc, fd});
}

Verdict criterion_3() {
  std::vector<std::pair<double, double>> pts;
  for (int n : {16, 32, 64, 128}) pts.emplace_back(n, peak_classical_fisher(n));
  const double e = fit_exponent(pts);
  return {std::fabs(e - 1.5) <= 0.1, "peak M_z Fisher exponent " + fmt(e, 5) + " (target 1.5 +/- 0.1)"};
}

std::string rows_summary(const std::vector<EmsdRow>& rows) {
  std::string s;
  for (const auto& r : rows) s += (s.empty() ? "" : ", ") + std::to_string(r.n) + ":" + fmt(r.ensemble.emsd_inverse());
  return s;
}

struct IsingRuns {
  ExperimentConfig config;
  std::vector<EmsdRow> realtime, nonadaptive;
  BoundsReport bounds;
  Ensemble at40_realtime, at40_twostep, at40_nonadaptive;
};

IsingRuns ising_runs() {
  IsingRuns r;
  r.config = load("ising_realtime.toml");
  auto& c = r.config;
  EnsembleOptions options;
  options.jobs = jobs();
  r.realtime = sweep_vs_n(c, "realtime", options, &std::cerr);
  r.nonadaptive = sweep_vs_n(c, "nonadaptive", options, &std::cerr);
  c.bounds_n_list = c.n_list;
  r.bounds = compute_bounds(c);

  const int n = 40;
  const auto prior = prior_grid(c);
  const auto channel = make_ising_channel(c, n);
  auto run = [&](const std::string& name) {
    auto e = run_ensemble(channel, make_strategy(c, prior, n, name), c.n_traj, c.m, c.master_seed, prior, options);
    std::cerr << "ordering: " << name << " N=40 done\n";
    return e;
  };
  r.at40_realtime = run("realtime");
  r.at40_twostep = run("twostep");
  r.at40_nonadaptive = run("nonadaptive");
  return r;
}

Verdict criterion_4(const IsingRuns& r) {
  const auto fit = inverse_emsd_fit(r.realtime);
  return {std::fabs(fit.exponent - 1.5) <= 0.2, "RealTime EMSD^-1 exponent " + fmt(fit.exponent) + " +/- " +
                                                    fmt(fit.exponent_standard_error, 2) +
                                                    " (target 1.5 +/- 0.2); EMSD^-1 by N " + rows_summary(r.realtime)};
}

Verdict criterion_5(const IsingRuns& r) {
  const auto fit = inverse_emsd_fit(r.nonadaptive);
  bool below = true;
  std::string detail;
  for (std::size_t i = 0; i < r.nonadaptive.size(); ++i) {
    const double obs = r.nonadaptive[i].ensemble.emsd_inverse();
    const double bound = r.bounds.rows[i].no_go_bound;
    below &= obs < bound;
    detail += (detail.empty() ? "" : ", ") + std::to_string(r.nonadaptive[i].n) + ":" + fmt(obs) + "<" + fmt(bound);
  }
  return {fit.exponent <= 1.1 && below,
          "NonAdaptive exponent " + fmt(fit.exponent) + " (<= 1.1); EMSD^-1 < no-go bound by N " + detail};
}

Verdict criterion_6(const IsingRuns& r) {
  auto gap = [](const Ensemble& lo, const Ensemble& hi) {
    return (hi.emsd.value - lo.emsd.value) / std::hypot(lo.emsd.standard_error, hi.emsd.standard_error);
  };
  const double g1 = gap(r.at40_realtime, r.at40_twostep);
  const double g2 = gap(r.at40_twostep, r.at40_nonadaptive);
  return {g1 >= 2.0 && g2 >= 2.0, "EMSD RealTime " + fmt(r.at40_realtime.emsd.value) + " < TwoStep " +
                                       fmt(r.at40_twostep.emsd.value) + " < NonAdaptive " +
                                       fmt(r.at40_nonadaptive.emsd.value) + "; separations " + fmt(g1, 3) + ", " +
                                       fmt(g2, 3) + " combined SE (>= 2)"};
}

Verdict criterion_7(const IsingRuns& r) {
  std::vector<const Ensemble*> all{&r.at40_realtime, &r.at40_twostep, &r.at40_nonadaptive};
  for (const auto* rows : {&r.realtime, &r.nonadaptive})
    for (const auto& row : *rows) all.push_back(&row.ensemble);
  int held = 0;
  double worst = -1e300;
  for (const auto* e : all) {
    const auto c = check_van_trees(*e);
    held += c.holds;
    worst = std::max(worst, c.observed / c.bound);
  }
  return {held == static_cast<int>(all.size()), std::to_string(held) + "/" + std::to_string(all.size()) +
                                                    " ensembles satisfy EMSD^-1 <= F0 + Gamma + 3 SE; max EMSD^-1 / (F0 + Gamma) " +
                                                    fmt(worst)};
}

Verdict criterion_8() {
  const auto c = load("bosehubbard_realtime.toml");
  EnsembleOptions options;
  options.jobs = jobs();
  const auto rt = sweep_vs_n(c, "realtime", options, &std::cerr);
  const auto na = sweep_vs_n(c, "nonadaptive", options, &std::cerr);
  const auto f_rt = inverse_emsd_fit(rt);
  const auto f_na = inverse_emsd_fit(na);
  return {std::fabs(f_rt.exponent - 1.34) <= 0.15 && f_na.exponent <= 1.1,
          "RealTime exponent " + fmt(f_rt.exponent) + " +/- " + fmt(f_rt.exponent_standard_error, 2) +
              " (target 1.34 +/- 0.15); NonAdaptive exponent " + fmt(f_na.exponent) + " (<= 1.1)"};
}

int run_cli(const std::string& args) {
  const std::string cmd = "'" + kCli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict criterion_9() {
  const fs::path root = fs::temp_directory_path() / ("critmetro_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(root);
  const auto bh = root / "bosehubbard_small.toml";
  std::ofstream(bh) << "[experiment]\nmodel = \"bosehubbard\"\nmaster_seed = 11\n[prior]\nlambda_min = 0.54\n"
                       "lambda_max = 0.9\nn_points = 400\n[simulate]\nn_list = [16, 36, 64]\nm = 8\n"
                       "m_list = [0, 4, 8]\nm_sweep_n = 36\nn_traj = 200\n[bounds]\nn_list = [16, 36, 64]\n"
                       "fit_n_list = [16, 36, 64]\nfit_points = 801\n";
  struct Case {
    std::string command, config;
  };
  const std::string smoke = kConfigs + "/smoke.toml";
  const std::vector<Case> cases{{"fisher", smoke},   {"simulate", smoke},     {"bounds", smoke},    {"pmf", smoke},
                                {"oracle", smoke},   {"simulate", bh.string()}, {"bounds", bh.string()}};
  int compared = 0;
  std::string problem;
  for (std::size_t i = 0; i < cases.size() && problem.empty(); ++i) {
    const auto& k = cases[i];
    std::vector<fs::path> dirs;
    for (const char* variant : {"a", "b", "c"}) dirs.push_back(root / (std::to_string(i) + variant));
    const std::string base = k.command + " -q -c '" + k.config + "' ";
    const int s1 = run_cli(base + "-j 1 -o '" + dirs[0].string() + "'");
    const int s2 = run_cli(base + "-j 1 -o '" + dirs[1].string() + "'");
    const int s3 = run_cli(base + "-j 8 -o '" + dirs[2].string() + "'");
    if (s1 || s2 || s3) {
      problem = k.command + " exited with status " + std::to_string(std::max({s1, s2, s3}));
      break;
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename();
      const auto ref = slurp(entry.path());
      if (slurp(dirs[1] / name) != ref || slurp(dirs[2] / name) != ref) {
        problem = k.command + " " + name.string() + " differs";
        break;
      }
      ++compared;
    }
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  if (!problem.empty()) return {false, problem};
  return {compared > 0, std::to_string(compared) + " output files byte-identical across reruns and --jobs 1 vs 8"};
}

StiffnessTable synthetic_stiffness_table(const StiffnessModel& reference, const std::vector<int>& ns) {
  StiffnessTable table;
  for (int n : ns) {
    auto m = reference;
    m.n_sites = n;
    for (int i = 0; i <= 120; ++i) {
      const double y = -6.0 + 0.1 * i;
      const double t_over_u = m.critical_ratio + y / std::pow(n, m.nu);
      table.rows.push_back({t_over_u, n, stiffness(m, t_over_u, 1.0)});
    }
  }
  return table;
}

Verdict criterion_10() {
  const auto c = load("bosehubbard_realtime.toml");
  const double nu = c.bosehubbard.nu;
  const double target = 1.0 + 2.0 * (nu - 0.5);
  const auto& ns = c.n_list;
  auto exponent = [&](const ScalingFunction& g) {
    std::vector<std::pair<double, double>> pts;
    for (int n : ns) {
      const auto ch = make_bosehubbard_channel(c, n, g);
      pts.emplace_back(n, fisher_hopping(ch.model(), c.bosehubbard.critical_ratio, 1.0));
    }
    return fit_exponent(pts);
  };
  const ScalingFunction logistic = LogisticScaling{c.bosehubbard.logistic_amplitude, c.bosehubbard.logistic_width};
  const auto reference = make_bosehubbard_channel(c, ns.front(), logistic).model();
  const ScalingFunction tabulated = scaling_function_from_table(synthetic_stiffness_table(reference, ns),
                                                                c.bosehubbard.critical_ratio, nu,
                                                                c.bosehubbard.savgol_window, c.bosehubbard.savgol_order);
  const double e_par = exponent(logistic);
  const double e_tab = exponent(tabulated);
  return {std::fabs(e_par - target) <= 0.05 && std::fabs(e_tab - target) <= 0.05,
          "fisher_hopping exponent parametric " + fmt(e_par, 5) + ", tabulated " + fmt(e_tab, 5) + " (target " +
              fmt(target, 4) + " +/- 0.05)"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int k, const std::function<Verdict()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << v.detail << " [" << fmt(secs, 3) << " s]"
              << std::endl;
  };

  report(1, criterion_1);
  report(2, criterion_2);
  report(3, criterion_3);
  std::optional<IsingRuns> runs;
  std::string runs_error;
  try {
    runs = ising_runs();
  } catch (const std::exception& e) {
    runs_error = e.what();
  }
  auto with_runs = [&](Verdict (*fn)(const IsingRuns&)) {
    return [&runs, &runs_error, fn]() -> Verdict {
      if (!runs) return {false, "Ising sweep failed: " + runs_error};
      return fn(*runs);
    };
  };
  report(4, with_runs(criterion_4));
  report(5, with_runs(criterion_5));
  report(6, with_runs(criterion_6));
  report(7, with_runs(criterion_7));
  report(8, criterion_8);
  report(9, criterion_9);
  report(10, criterion_10);
  std::cout << (failures ? "FAIL" : "PASS") << ": " << 10 - failures << "/10 criteria" << std::endl;
  return failures ? 1 : 0;
}
