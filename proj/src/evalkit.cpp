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

#include "handover/evalkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>

namespace handover::eval
{

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(std::int64_t num, std::int64_t den)
{
  return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
}

double inverse_ttc(const KinematicPair & p)
{
  const double t = ttc(p);
  return std::isinf(t) ? 0.0 : 1.0 / t;
}

RiskLevel shifted_level(const KinematicPair & p, const RiskThresholds & thr, double shift)
{
  if (shift == kInfinity) {
    return RiskLevel::RL3;
  }
  if (shift == -kInfinity) {
    return RiskLevel::RL0;
  }
  RiskThresholds s = thr;
  s.ittc_intercepts.c5 -= shift;
  s.ittc_intercepts.c50 -= shift;
  s.ittc_intercepts.c95 -= shift;
  s.ittc_floors.thr1 -= shift;
  s.ittc_floors.thr2 -= shift;
  s.ittc_floors.thr3 -= shift;
  s.tm_bounds.pr1 += shift;
  s.tm_bounds.pr2 += shift;
  s.tm_bounds.pr3 += shift;
  return combined_risk(
    obvious_risk(inverse_ttc(p), p.host_speed, s), potential_risk(time_margin(p), s));
}

bool any_combined(const LabeledCase & c, const RiskThresholds & thr, RiskLevel min_level,
                  double shift)
{
  return std::any_of(c.series.begin(), c.series.end(), [&](const KinematicPair & p) {
    return to_int(shifted_level(p, thr, shift)) >= to_int(min_level);
  });
}

double min_metric(const LabeledCase & c, DetectorKind kind)
{
  double m = kInfinity;
  for (const KinematicPair & p : c.series) {
    m = std::min(m, kind == DetectorKind::Ttc ? ttc(p) : time_margin(p));
  }
  return m;
}

}  // namespace

void validate(const LabeledCase & c)
{
  if (c.series.empty()) {
    throw EvalError("case '" + c.id + "': empty series");
  }
  if (c.time.size() != c.series.size()) {
    throw EvalError("case '" + c.id + "': time and sample counts differ");
  }
  if (c.brake_onset && *c.brake_onset >= c.series.size()) {
    throw EvalError("case '" + c.id + "': brake onset outside the series");
  }
  for (const KinematicPair & p : c.series) {
    try {
      handover::validate(p);
    } catch (const std::exception & e) {
      throw EvalError("case '" + c.id + "': " + e.what());
    }
  }
}

Detector ttc_thresh(double tau) { return {DetectorKind::Ttc, tau, {}, RiskLevel::RL2}; }
Detector tm_thresh(double tau) { return {DetectorKind::Tm, tau, {}, RiskLevel::RL2}; }
Detector combined(const RiskThresholds & thr, RiskLevel min_level)
{
  return {DetectorKind::Combined, 0.0, thr, min_level};
}

bool detect(const LabeledCase & c, const Detector & d)
{
  switch (d.kind) {
    case DetectorKind::Ttc:
    case DetectorKind::Tm:
      return min_metric(c, d.kind) <= d.tau;
    case DetectorKind::Combined:
      return any_combined(c, d.thresholds, d.min_level, 0.0);
  }
  return false;
}

ConfusionMatrix confusion(std::span<const bool> detections, std::span<const CaseLabel> labels)
{
  if (detections.empty()) {
    throw EvalError("confusion: no cases");
  }
  if (detections.size() != labels.size()) {
    throw EvalError("confusion: detections and labels differ in length");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const bool danger = labels[i] == CaseLabel::Dangerous;
    if (detections[i]) {
      ++(danger ? cm.tp : cm.fp);
    } else {
      ++(danger ? cm.fn : cm.tn);
    }
  }
  return cm;
}

ConfusionIndices indices(const ConfusionMatrix & cm)
{
  ConfusionIndices ix;
  ix.tp_rate = ratio(cm.tp, cm.tp + cm.fn);
  ix.fp_rate = ratio(cm.fp, cm.fp + cm.tn);
  ix.fn_rate = ratio(cm.fn, cm.tp + cm.fn);
  ix.tn_rate = ratio(cm.tn, cm.fp + cm.tn);
  ix.accuracy = ratio(cm.tp + cm.tn, cm.total());
  ix.precision = ratio(cm.tp, cm.tp + cm.fp);
  return ix;
}

RocCurve roc_sweep(std::span<const LabeledCase> cases, const SweepSpec & spec)
{
  if (spec.grid.empty()) {
    throw EvalError("roc_sweep: empty threshold grid");
  }
  std::vector<CaseLabel> labels;
  labels.reserve(cases.size());
  for (const LabeledCase & c : cases) {
    labels.push_back(c.label);
  }
  const auto dangerous = std::count(labels.begin(), labels.end(), CaseLabel::Dangerous);
  if (dangerous == 0 || dangerous == static_cast<std::ptrdiff_t>(labels.size())) {
    throw EvalError("roc_sweep: need both dangerous and normal cases");
  }

  std::vector<double> minima;
  if (spec.family != DetectorKind::Combined) {
    for (const LabeledCase & c : cases) {
      minima.push_back(min_metric(c, spec.family));
    }
  }

  RocCurve roc;
  const std::unique_ptr<bool[]> hits(new bool[cases.size()]);
  for (double tau : spec.grid) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      hits[i] = spec.family == DetectorKind::Combined
                  ? any_combined(cases[i], spec.thresholds, spec.min_level, tau)
                  : minima[i] <= tau;
    }
    const ConfusionMatrix cm = confusion(std::span<const bool>(hits.get(), cases.size()), labels);
    const ConfusionIndices ix = indices(cm);
    roc.points.push_back({ix.fp_rate, ix.tp_rate, tau, cm});
  }
  return roc;
}

std::vector<double> default_grid(DetectorKind family)
{
  std::vector<double> g{-kInfinity};
  switch (family) {
    case DetectorKind::Ttc:
      for (int i = 0; i <= 60; ++i) {
        g.push_back(0.25 * i);
      }
      break;
    case DetectorKind::Tm:
      for (int i = -10; i <= 50; ++i) {
        g.push_back(0.1 * i);
      }
      break;
    case DetectorKind::Combined:
      for (int i = -20; i <= 20; ++i) {
        g.push_back(0.1 * i);
      }
      break;
  }
  g.push_back(kInfinity);
  return g;
}

double percentile(std::vector<double> values, double p)
{
  if (values.empty()) {
    throw EvalError("percentile: no values");
  }
  if (!(p >= 0.0 && p <= 100.0)) {
    throw EvalError("percentile: p must be in [0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const auto rank = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(p * n / 100.0)));
  return values[std::min(rank, values.size()) - 1];
}

FitReport fit_thresholds(std::span<const LabeledCase> cases, const RiskThresholds & base)
{
  std::vector<double> speed;
  std::vector<double> inv;
  std::vector<double> tm;
  for (const LabeledCase & c : cases) {
    if (c.label != CaseLabel::Dangerous || !c.brake_onset) {
      continue;
    }
    validate(c);
    const KinematicPair & p = c.series[*c.brake_onset];
    speed.push_back(p.host_speed);
    inv.push_back(inverse_ttc(p));
    tm.push_back(time_margin(p));
  }
  if (speed.size() < kMinFitCases) {
    throw EvalError(
      "fit: need at least " + std::to_string(kMinFitCases) +
      " dangerous cases with a brake onset, got " + std::to_string(speed.size()));
  }
  const double n = static_cast<double>(speed.size());
  double mv = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < speed.size(); ++i) {
    mv += speed[i];
    my += inv[i];
  }
  mv /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < speed.size(); ++i) {
    sxx += (speed[i] - mv) * (speed[i] - mv);
    sxy += (speed[i] - mv) * (inv[i] - my);
  }
  if (!(sxx / n > 1e-12 * std::max(1.0, mv * mv))) {
    throw EvalError("fit: host speeds at onset have no spread");
  }

  FitReport r;
  r.cases_used = speed.size();
  RiskThresholds & thr = r.thresholds;
  thr = base;
  thr.ittc_slope = sxy / sxx;
  r.intercept = my - thr.ittc_slope * mv;
  std::vector<double> resid(speed.size());
  for (std::size_t i = 0; i < speed.size(); ++i) {
    resid[i] = inv[i] - thr.ittc_slope * speed[i];
  }
  thr.ittc_intercepts = {percentile(resid, 5), percentile(resid, 50), percentile(resid, 95)};
  thr.tm_bounds = {percentile(tm, 95), percentile(tm, 50), percentile(tm, 5)};
  return r;
}

// ---- generator --------------------------------------------------------------

namespace
{

constexpr int kLadder = 25;
constexpr std::array<double, 4> kSpeeds{2.0, 3.0, 4.0, 5.0};
constexpr double kDecel = kDefaultDecel;
constexpr std::size_t kPreSamples = 20;
constexpr std::size_t kPostSamples = 5;

double ladder(int j, const std::array<std::pair<int, double>, 5> & anchors)
{
  for (std::size_t a = 1; a < anchors.size(); ++a) {
    if (j <= anchors[a].first) {
      const auto [j0, v0] = anchors[a - 1];
      const auto [j1, v1] = anchors[a];
      return v0 + (v1 - v0) * static_cast<double>(j - j0) / static_cast<double>(j1 - j0);
    }
  }
  return anchors.back().second;
}

double residual_at(int j)
{
  return ladder(j, {{{0, 0.42}, {1, 0.49}, {12, 1.18}, {23, 1.73}, {24, 1.80}}});
}

// Descends as the residual ladder rises: faster closing, less margin.
double tm_at(int j)
{
  return ladder(j, {{{0, 1.6}, {1, 1.4}, {12, 0.5}, {23, 0.1}, {24, 0.05}}});
}

// Closing speed c = v_h - v_t at which 1/TTC = y and TM = m for equal decels.
double closing_speed(double v, double y, double m)
{
  const double b = 1.0 / y - v / kDecel;
  return kDecel * (-b + std::sqrt(b * b + 2.0 * m * v / kDecel));
}

// Largest TM reachable at 1/TTC = y keeps the target moving; the bound is
// 1/y - v/(2 a) with a stopped target.
double tm_cap(double v, double y) { return 0.95 * (1.0 / y - v / (2.0 * kDecel)); }

LabeledCase dangerous_case(std::size_t idx, double v, double y, double m, double dt)
{
  const double c = closing_speed(v, y, m);
  if (!(c > 0.0 && c < v)) {
    throw EvalError("generator: infeasible onset");
  }
  const double vt = v - c;
  const double gap = c / y;

  LabeledCase lc;
  lc.id = "d" + std::to_string(idx);
  lc.label = CaseLabel::Dangerous;
  for (std::size_t s = 0; s <= kPreSamples; ++s) {
    const double before = dt * static_cast<double>(kPreSamples - s);
    lc.time.push_back(dt * static_cast<double>(s));
    lc.series.push_back({gap + c * before, v, vt, kDecel, kDecel});
  }
  lc.brake_onset = kPreSamples;
  for (std::size_t s = 1; s <= kPostSamples; ++s) {
    const double tau = dt * static_cast<double>(s);
    const double stop = v / kDecel;
    const double travelled = tau < stop ? v * tau - 0.5 * kDecel * tau * tau : 0.5 * v * stop;
    const double vh = std::max(v - kDecel * tau, 0.0);
    lc.time.push_back(dt * static_cast<double>(kPreSamples + s));
    lc.series.push_back({gap + vt * tau - travelled, vh, vt, kDecel, kDecel});
  }
  return lc;
}

}  // namespace

std::vector<LabeledCase> generate_cases(const GeneratorSpec & spec)
{
  if (!(spec.sample_time > 0.0) || !(spec.noise_sigma >= 0.0)) {
    throw EvalError("generator: sample_time must be > 0 and noise_sigma >= 0");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<LabeledCase> out;
  out.reserve(spec.dangerous + spec.normal);
  for (std::size_t i = 0; i < spec.dangerous; ++i) {
    const double v = kSpeeds[i % kSpeeds.size()];
    const int j = static_cast<int>((i / kSpeeds.size()) % kLadder);
    double y = spec.slope * v + residual_at(j);
    if (spec.noise_sigma > 0.0) {
      y = std::max(y + spec.noise_sigma * noise(rng), 0.02);
    }
    double m = tm_at(j);
    if (spec.constant_tm) {
      // the TM value wins: pull 1/TTC down far enough to reach it
      m = *spec.constant_tm;
      y = std::min(y, 1.0 / (m / 0.95 + v / (2.0 * kDecel)));
    }
    m = std::min(m, tm_cap(v, y));
    out.push_back(dangerous_case(i, v, y, m, spec.sample_time));
  }
  for (std::size_t i = 0; i < spec.normal; ++i) {
    const double v = 5.0 + 20.0 * unit(rng);
    const double c = -2.0 + 3.0 * unit(rng);
    const double gap0 = 2.5 * v + v * v / (2.0 * kDecel) + 5.0 + 35.0 * unit(rng);
    LabeledCase lc;
    lc.id = "n" + std::to_string(i);
    lc.label = CaseLabel::Normal;
    for (std::size_t s = 0; s < 30; ++s) {
      const double t = spec.sample_time * static_cast<double>(s);
      lc.time.push_back(t);
      lc.series.push_back({gap0 - c * t, v, v - c, kDecel, kDecel});
    }
    out.push_back(std::move(lc));
  }
  return out;
}

std::string to_string(DetectorKind kind)
{
  switch (kind) {
    case DetectorKind::Ttc:
      return "ttc";
    case DetectorKind::Tm:
      return "tm";
    case DetectorKind::Combined:
      return "combined";
  }
  return "unknown";
}

DetectorKind detector_from_string(const std::string & name)
{
  if (name == "ttc") {
    return DetectorKind::Ttc;
  }
  if (name == "tm") {
    return DetectorKind::Tm;
  }
  if (name == "combined") {
    return DetectorKind::Combined;
  }
  throw EvalError("unknown detector '" + name + "' (expected ttc, tm or combined)");
}

}  // namespace handover::eval
