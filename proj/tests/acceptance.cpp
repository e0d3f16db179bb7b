// Copyright 2026 The handover-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include "handover/evalkit.hpp"
#include "handover/game_mpc.hpp"
#include "handover/plant.hpp"
#include "handover/privilege.hpp"
#include "handover/risk.hpp"
#include "handover/scenario.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

using namespace handover;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string & detail)
{
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

void info(const std::string & line)
{
  std::printf("       %s\n", line.c_str());
}

std::string fmt(const char * f, double a)
{
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string scenario_dir() { return std::string(HANDOVER_SOURCE_DIR) + "/configs/scenarios"; }

// ---- 1 ----------------------------------------------------------------------

void tm_oracle()
{
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> g(1.0, 60.0), v(1.0, 30.0), frac(0.0, 1.0), a(4.0, 9.0);
  const double dt = 1e-3;
  long pairs = 0;
  long bad = 0;
  long negative = 0;
  while (pairs < 10000) {
    // target no faster and braking no softer than the host, so the gap
    // shrinks until the host stops and the stopping-distance margin binds
    const double vh = v(rng);
    const double vt = vh * frac(rng);
    const double ah = a(rng);
    const double at = ah + 2.0 * frac(rng);
    const KinematicPair p{g(rng), vh, vt, ah, at};
    const double tm = time_margin(p);
    ++pairs;
    if (tm < 0.0) {
      ++negative;
      bad += oracle::braking_min_gap(p, 0.0, dt) < 0.0 ? 0 : 1;
      continue;
    }
    const bool safe_before = oracle::braking_min_gap(p, tm - dt, dt) > -1e-9;
    const bool hit_after = oracle::braking_min_gap(p, tm + dt, dt) < 0.0;
    bad += safe_before && hit_after ? 0 : 1;
  }
  const double elapsed = seconds_since(t0);
  report(1, bad == 0 && elapsed < 30.0,
         std::to_string(pairs) + " pairs (" + std::to_string(negative) + " with TM < 0), " +
           std::to_string(bad) + " mismatches, " + fmt("%.2f s", elapsed));
}

// ---- 2 ----------------------------------------------------------------------

void worked_cases()
{
  const KinematicPair fast{10.0, 31.0, 30.0};
  const KinematicPair slow{10.0, 6.0, 5.0};
  const auto a = assess(fast, {});
  const auto b = assess(slow, {});
  const bool ok = std::abs(a.ttc - 10.0) < 1e-9 && std::abs(b.ttc - 10.0) < 1e-9 &&
                  std::abs(a.tm - 0.1820) < 5e-5 && std::abs(b.tm - 1.5357) < 5e-5 &&
                  a.potential == PotentialRisk::PR2 && b.potential == PotentialRisk::PR0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "TTC %.4f / %.4f s, TM %.4f / %.4f s, PR%d / PR%d", a.ttc, b.ttc,
                a.tm, b.tm, to_int(a.potential), to_int(b.potential));
  report(2, ok, buf);
}

// ---- 3 ----------------------------------------------------------------------

void nash_closed_form()
{
  const auto t0 = Clock::now();
  DiscreteJointModel m;
  m.A = Eigen::MatrixXd::Zero(1, 1);
  m.B1 = m.B2 = m.C = Eigen::MatrixXd::Ones(1, 1);
  m.Bw = Eigen::MatrixXd::Zero(1, 0);
  m.step_time = 1.0;
  const auto pred = build_prediction(m, 1, 1);
  ConfidenceWeights w;
  w.Q1 = w.Q2 = w.R1 = w.R2 = Eigen::MatrixXd::Ones(1, 1);
  const auto t = constant_targets(Eigen::VectorXd::Ones(1), 1);
  const auto s = nash_solve(pred, w, t, t, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(0));
  const double scalar_err =
    s.exists ? std::max(std::abs(s.u_D(0) - 1.0 / 3.0), std::abs(s.u_A(0) - 1.0 / 3.0)) : 1.0;

  std::mt19937_64 rng(303);
  int converged = 0;
  double ibr_err = 0.0;
  double grad = 0.0;
  bool all_exist = true;
  for (int i = 0; i < 100; ++i) {
    const int Np = 1 + i % 5;
    const auto in = oracle::random_instance(rng, Np, 1 + (i / 5) % Np);
    const auto sol = nash_solve(in.pred, in.w, in.T1, in.T2, in.x, in.D);
    if (!sol.exists) {
      all_exist = false;
      continue;
    }
    if (const auto ibr = oracle::iterated_best_response(in)) {
      ++converged;
      ibr_err = std::max({ibr_err, (sol.U1_star - ibr->first).lpNorm<Eigen::Infinity>(),
                          (sol.U2_star - ibr->second).lpNorm<Eigen::Infinity>()});
    }
    grad = std::max({grad, oracle::own_gradient(in, 1, sol.U1_star, sol.U2_star).lpNorm<Eigen::Infinity>(),
                     oracle::own_gradient(in, 2, sol.U1_star, sol.U2_star).lpNorm<Eigen::Infinity>()});
  }
  const double elapsed = seconds_since(t0);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "scalar err %.2e; IBR converged on %d/100, max diff %.2e; max own-gradient %.2e; "
                "%.2f s",
                scalar_err, converged, ibr_err, grad, elapsed);
  report(3, all_exist && scalar_err <= 1e-9 && converged > 0 && ibr_err <= 1e-8 && grad <= 1e-6 &&
              elapsed < 10.0,
         buf);
}

// ---- 4 ----------------------------------------------------------------------

void single_player()
{
  std::mt19937_64 rng(404);
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    const int Np = 1 + i % 5;
    auto in = oracle::random_instance(rng, Np, 1 + (i / 5) % Np);
    in.w.Q2.setZero();
    const auto sol = nash_solve(in.pred, in.w, in.T1, in.T2, in.x, in.D);
    if (!sol.exists) {
      ok = false;
      continue;
    }
    Eigen::VectorXd free = in.pred.Psi * in.x;
    if (in.D.size() > 0) {
      free += in.pred.Xi * in.D;
    }
    const Eigen::VectorXd ref =
      oracle::direct_gain(in.pred.Theta1, in.w.Q1, in.w.R1) * (in.T1.stacked - free);
    worst = std::max(worst, (sol.U1_star - ref).lpNorm<Eigen::Infinity>() /
                              std::max(1.0, ref.lpNorm<Eigen::Infinity>()));
  }
  report(4, ok && worst <= 1e-9, fmt("100 instances, max deviation %.2e", worst));
}

// ---- 5 ----------------------------------------------------------------------

void factorization()
{
  std::mt19937_64 rng(505);
  double fact = 0.0;
  double gain = 0.0;
  int well = 0;
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    const int Np = 1 + i % 5;
    const auto in = oracle::random_instance(rng, Np, 1 + (i / 5) % Np);
    const auto g = nash_gains(in.pred, in.w);
    if (!g.exists) {
      ok = false;
      continue;
    }
    const auto & T1 = in.pred.Theta1;
    const auto & T2 = in.pred.Theta2;
    const Eigen::Index n1 = T1.cols();
    const Eigen::Index n2 = T2.cols();
    const Eigen::MatrixXd H1 = T1.transpose() * in.w.Q1 * T1 + in.w.R1;
    const Eigen::MatrixXd H2 = T2.transpose() * in.w.Q2 * T2 + in.w.R2;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    H.topLeftCorner(n1, n1) = H1;
    H.bottomRightCorner(n2, n2) = H2;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n1 + n2, n1 + n2);
    const Eigen::MatrixXd P = coupling_matrix(in.pred, in.w);
    fact = std::max(fact, (H * (I - g.L) - P).norm() / P.norm());

    const auto cond = [](const Eigen::MatrixXd & M) {
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
      return svd.singularValues()(0) / svd.singularValues().tail(1)(0);
    };
    if (cond(H1) < 1e6 && cond(H2) < 1e6) {
      ++well;
      const auto d1 = oracle::direct_gain(T1, in.w.Q1, in.w.R1);
      const auto d2 = oracle::direct_gain(T2, in.w.Q2, in.w.R2);
      gain = std::max({gain, (g.F1 - d1).norm() / std::max(1.0, d1.norm()),
                       (g.F2 - d2).norm() / std::max(1.0, d2.norm())});
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "factorization rel err %.2e; square-root vs direct gains %.2e on %d instances", fact,
                gain, well);
  report(5, ok && fact <= 1e-9 && well > 0 && gain <= 1e-8, buf);
}

// ---- 6 ----------------------------------------------------------------------

void discretization()
{
  const auto lon = discretize(longitudinal_continuous(), 0.01);
  const double T = 0.01;
  Eigen::Matrix2d A;
  A << 1.0, -T, 0.0, 1.0;
  Eigen::Vector2d B(-0.5 * T * T, T);
  Eigen::Vector2d W(T, 0.0);
  const double lon_err = std::max({(lon.A - A).cwiseAbs().maxCoeff(),
                                   (lon.B1 - B).cwiseAbs().maxCoeff(),
                                   (lon.B2 - B).cwiseAbs().maxCoeff(),
                                   (lon.Bw - W).cwiseAbs().maxCoeff()});

  const auto cont = lateral_continuous({}, 20.0);
  const auto lat = discretize(cont, T);
  const auto err_at = [&](int n) {
    const auto e = oracle::euler_discretize(cont, T, n);
    return std::max({(lat.A - e.A).cwiseAbs().maxCoeff(), (lat.B1 - e.B1).cwiseAbs().maxCoeff(),
                     (lat.B2 - e.B2).cwiseAbs().maxCoeff()});
  };
  const double lat_err = err_at(100);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "longitudinal max err %.2e (tol 1e-15); lateral vs 100-sub-step Euler max err %.2e "
                "(tol 1e-6)",
                lon_err, lat_err);
  report(6, lon_err <= 1e-15 && lat_err <= 1e-6, buf);
  char conv[160];
  std::snprintf(conv, sizeof conv,
                "Euler sub-step convergence: 1000 -> %.2e, 10000 -> %.2e (first order in the "
                "sub-step)",
                err_at(1000), err_at(10000));
  info(conv);
}

// ---- 7 ----------------------------------------------------------------------

struct Run
{
  ScenarioConfig config;
  SimLog log;
  RunSummary summary;
  double wall{0.0};
};

Run run_bundled(const std::string & stem)
{
  Run r;
  r.config = load_config(scenario_dir() + "/" + stem + ".json");
  const auto t0 = Clock::now();
  r.log = run_scenario(r.config);
  r.wall = seconds_since(t0);
  r.summary = summarize(r.config, r.log);
  return r;
}

void scenario_anchors()
{
  bool ok = true;
  const auto time_ok = [&](const Run & r, double expected, std::optional<RiskLevel> level) {
    const auto & s = r.summary;
    bool good = s.first_risk_time && std::abs(*s.first_risk_time - expected) <= 0.3 + 1e-9 &&
                !s.handovers.empty() && r.wall < 5.0;
    if (level) {
      good = good && s.first_risk_level == level;
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s: handover %.2f s (expected %.1f +- 0.3), wall %.3f s",
                  s.name.c_str(), s.first_risk_time.value_or(-1.0), expected, r.wall);
    info(buf);
    return good;
  };

  const Run lc1 = run_bundled("lane_change_case1");
  const Run lc2 = run_bundled("lane_change_case2");
  const Run ci1 = run_bundled("cut_in_case1");
  const Run ci2 = run_bundled("cut_in_case2");
  ok = time_ok(lc1, 3.2, std::nullopt) && ok;
  ok = time_ok(lc2, 4.9, std::nullopt) && ok;
  ok = time_ok(ci1, 0.5, RiskLevel::RL1) && ok;
  ok = time_ok(ci2, 0.6, RiskLevel::RL2) && ok;
  for (const Run * r : {&lc1, &lc2}) {
    const bool lane = std::abs(r->summary.final_dy) <= 0.2;
    info(r->summary.name + fmt(": final d_y %.4f m", r->summary.final_dy));
    ok = ok && lane;
  }
  for (const Run * r : {&ci1, &ci2}) {
    const auto & s = r->summary;
    const double dv = std::abs(s.final_speed - s.target_speed.value_or(0.0));
    const bool good = dv <= 0.5 && s.min_gap && *s.min_gap > 0.0 && !s.collision;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s: |v_x - v_t| %.4f m/s, min gap %.3f m, peak decel %.3f",
                  s.name.c_str(), dv, s.min_gap.value_or(-1.0), s.peak_decel);
    info(buf);
    ok = ok && good;
  }
  const bool decel = ci2.summary.peak_decel > ci1.summary.peak_decel;
  report(7, ok && decel,
         std::string("anchors on 4 runs, peak decel case 2 > case 1: ") + (decel ? "yes" : "no"));
}

// ---- 8 ----------------------------------------------------------------------

struct Ramp
{
  long steps{0};
  double max_second_diff{0.0};
};

// Realised length of the first ramp in a kappa1 series: from the last sample
// at the start value to the first sample at the end value.
std::optional<Ramp> first_ramp(const std::vector<double> & k1, double end_value)
{
  std::size_t start = 0;
  while (start + 1 < k1.size() && k1[start + 1] == k1[start]) {
    ++start;
  }
  if (start + 1 >= k1.size()) {
    return std::nullopt;
  }
  std::size_t end = start + 1;
  while (end < k1.size() && k1[end] != end_value) {
    ++end;
  }
  if (end == k1.size()) {
    return std::nullopt;
  }
  Ramp r;
  r.steps = static_cast<long>(end - start);
  for (std::size_t i = start + 2; i <= end; ++i) {
    r.max_second_diff =
      std::max(r.max_second_diff, std::abs((k1[i] - k1[i - 1]) - (k1[i - 1] - k1[i - 2])));
  }
  return r;
}

void privilege_invariants()
{
  bool ok = true;
  const double eps = std::numeric_limits<double>::epsilon();
  long rows = 0;
  long broken = 0;
  double worst_linear = 0.0;
  bool ramps_ok = true;
  for (const auto & entry : std::filesystem::directory_iterator(scenario_dir())) {
    if (entry.path().extension() != ".json") {
      continue;
    }
    const ScenarioConfig c = load_config(entry.path().string());
    const SimLog log = run_scenario(c);
    std::vector<double> k1;
    for (const SimRow & r : log.rows) {
      ++rows;
      broken += r.kappa1 + r.kappa2 == c.controller.total_privilege ? 0 : 1;
      k1.push_back(r.kappa1);
    }
    if (!log.handovers.empty()) {
      const auto ramp = first_ramp(k1, 0.0);
      const long expected = std::lround(log.handovers.front().duration / c.step_time);
      const bool good = ramp && std::abs(ramp->steps - expected) <= 1 &&
                        ramp->max_second_diff <= 4.0 * eps * c.controller.total_privilege;
      if (ramp) {
        worst_linear = std::max(worst_linear, ramp->max_second_diff);
        info(c.name + ": ramp " + std::to_string(ramp->steps) + " steps, planned " +
             std::to_string(expected));
      }
      ramps_ok = ramps_ok && good;
    }
  }

  // every configured duration, driven through the scheduler
  const HandoverPolicy pol;
  const double total = 0.1;
  struct Drive
  {
    const char * what;
    RiskLevel level;
    std::optional<bool> intent;
    double seconds;
    bool is_return;
  };
  const Drive drives[] = {
    {"RL1 takeover", RiskLevel::RL1, std::nullopt, 3.0, false},
    {"RL2 takeover", RiskLevel::RL2, std::nullopt, 1.0, false},
    {"RL3 takeover", RiskLevel::RL3, std::nullopt, 0.5, false},
    {"return with intent", RiskLevel::RL0, true, 2.0, true},
    {"return without intent", RiskLevel::RL0, false, 6.0, true},
  };
  for (const Drive & d : drives) {
    PrivilegeState s = initial_privilege(total);
    std::vector<double> k1{s.kappa1};
    long sum_breaks = 0;
    if (d.is_return) {
      for (int i = 0; i < 200; ++i) {
        s = step_privilege(s, RiskLevel::RL3, std::nullopt, pol);
      }
      k1 = {s.kappa1};
    }
    for (int i = 0; i < 1000; ++i) {
      s = step_privilege(s, d.level, d.intent, pol);
      k1.push_back(s.kappa1);
      sum_breaks += s.kappa1 + s.kappa2 == total ? 0 : 1;
    }
    const auto ramp = first_ramp(k1, d.is_return ? total : 0.0);
    const long expected = std::lround(d.seconds / pol.step_time);
    const bool good = ramp && std::abs(ramp->steps - expected) <= 1 && sum_breaks == 0 &&
                      ramp->max_second_diff <= 4.0 * eps * total;
    info(std::string(d.what) + ": " + (ramp ? std::to_string(ramp->steps) : "no") +
         " steps, expected " + std::to_string(expected));
    if (ramp) {
      worst_linear = std::max(worst_linear, ramp->max_second_diff);
    }
    ramps_ok = ramps_ok && good;
  }
  ok = broken == 0 && ramps_ok;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%ld logged rows, %ld with kappa1 + kappa2 != A; max ramp second difference %.1e",
                rows, broken, worst_linear);
  report(8, ok, buf);
}

// ---- 9 ----------------------------------------------------------------------

void evalkit_checks()
{
  std::mt19937_64 rng(909);
  std::bernoulli_distribution coin(0.4);
  bool counts_ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + trial % 50;
    std::vector<bool> hit(n);
    std::vector<bool> danger(n);
    const std::unique_ptr<bool[]> buf(new bool[n]);
    std::vector<eval::CaseLabel> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      hit[i] = coin(rng);
      danger[i] = coin(rng);
      buf[i] = hit[i];
      labels[i] = danger[i] ? eval::CaseLabel::Dangerous : eval::CaseLabel::Normal;
    }
    const auto cm = eval::confusion(std::span<const bool>(buf.get(), n), labels);
    const auto ref = oracle::count_outcomes(hit, danger);
    counts_ok = counts_ok && cm.tp == ref.tp && cm.fp == ref.fp && cm.fn == ref.fn &&
                cm.tn == ref.tn;
  }

  const auto cases = eval::generate_cases({});
  const auto fit = eval::fit_thresholds(cases);
  const double slope_err = std::abs(fit.thresholds.ittc_slope - (-0.0717));

  bool roc_ok = true;
  for (auto family : {eval::DetectorKind::Ttc, eval::DetectorKind::Tm, eval::DetectorKind::Combined}) {
    eval::GeneratorSpec g;
    g.noise_sigma = 0.05;
    g.seed = 1;
    eval::SweepSpec s;
    s.family = family;
    s.grid = eval::default_grid(family);
    const auto roc = eval::roc_sweep(eval::generate_cases(g), s);
    const auto & f = roc.points.front();
    const auto & b = roc.points.back();
    roc_ok = roc_ok && f.fp_rate == 0.0 && f.tp_rate == 0.0 && b.fp_rate == 1.0 && b.tp_rate == 1.0;
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
      roc_ok = roc_ok && roc.points[i].fp_rate >= roc.points[i - 1].fp_rate &&
               roc.points[i].tp_rate >= roc.points[i - 1].tp_rate;
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "counts exact: %s; slope error %.2e; ROC monotone with ends: %s",
                counts_ok ? "yes" : "no", slope_err, roc_ok ? "yes" : "no");
  report(9, counts_ok && slope_err <= 1e-6 && roc_ok, buf);
}

}  // namespace

int main()
{
  const auto t0 = Clock::now();
  tm_oracle();
  worked_cases();
  nash_closed_form();
  single_player();
  factorization();
  discretization();
  scenario_anchors();
  privilege_invariants();
  evalkit_checks();
  std::printf("%d of 9 criteria failed (%.2f s)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
