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

#include "handover/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace handover
{

NashNonExistence::NashNonExistence(Step step, double condition)
: std::runtime_error(
    "no Nash equilibrium at step " + std::to_string(step) + " (condition " +
    std::to_string(condition) + ")"),
  step_(step),
  condition_(condition)
{
}

namespace
{

void require(bool ok, const char * what)
{
  if (!ok) {
    throw ConfigError(what);
  }
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void validate(const ScenarioConfig & c)
{
  require(finite_positive(c.host_speed), "host_speed must be > 0");
  if (c.target) {
    require(std::isfinite(c.target->initial_gap), "target_initial_gap must be finite");
    require(std::isfinite(c.target->speed) && c.target->speed >= 0.0, "target_speed must be >= 0");
  }
  require(finite_positive(c.lane_width), "lane_width must be > 0");
  require(finite_positive(c.step_time), "step_time must be > 0");
  require(finite_positive(c.duration), "duration must be > 0");
  require(finite_positive(c.vehicle_length), "vehicle_length must be > 0");
  require(finite_positive(c.vehicle_width), "vehicle_width must be > 0");
  require(finite_positive(c.host_decel) && finite_positive(c.target_decel),
          "decelerations must be > 0");
  require(c.controller.Nu >= 1, "Nu must be >= 1");
  require(c.controller.Np >= c.controller.Nu, "Np must be >= Nu");
  require(finite_positive(c.controller.r1) && finite_positive(c.controller.r2),
          "r1 and r2 must be > 0");
  require(std::isfinite(c.controller.lambda1) && c.controller.lambda1 >= 0.0 &&
            std::isfinite(c.controller.lambda2) && c.controller.lambda2 >= 0.0,
          "lambda1 and lambda2 must be >= 0");
  require(finite_positive(c.controller.total_privilege), "A must be > 0");
  require(c.limits.max_steer > 0.0 && c.limits.min_accel < 0.0 && c.limits.max_accel > 0.0,
          "actuator limits must bracket zero");
  if (c.kind == ScenarioKind::LaneChange) {
    require(finite_positive(c.maneuver_length), "maneuver_length must be > 0");
    require(std::isfinite(c.maneuver_start) && c.maneuver_start >= 0.0,
            "maneuver_start must be >= 0");
    require(std::isfinite(c.line_crossing_time) && c.line_crossing_time >= 0.0,
            "line_crossing_time must be >= 0");
  } else {
    require(c.target.has_value(), "cut_in needs a target");
    require(c.target->initial_gap > 0.0, "cut_in target must start ahead");
    require(std::isfinite(c.cut_in.initial_lateral_offset), "cut_in offset must be finite");
    require(std::isfinite(c.cut_in.lateral_speed) && c.cut_in.lateral_speed >= 0.0,
            "cut_in lateral_speed must be >= 0");
  }
  try {
    validate(c.vehicle);
    validate(c.thresholds);
    HandoverPolicy p = c.policy;
    p.step_time = c.step_time;
    validate(p);
  } catch (const std::exception & e) {
    throw ConfigError(e.what());
  }
}

Eigen::Vector2d lane_change_profile(double length, double width, double speed, double t)
{
  const double s = std::clamp(speed * t / length, 0.0, 1.0);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double dy = width * (10.0 * s3 - 15.0 * s2 * s2 + 6.0 * s3 * s2);
  const double slope = width * (30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2) / length;
  return {dy, std::atan(slope)};
}

namespace
{

RiskAssessment no_risk()
{
  RiskAssessment r;
  r.ttc = kInfinity;
  r.inv_ttc = 0.0;
  r.tm = kInfinity;
  return r;
}

RiskAssessment contact_risk()
{
  RiskAssessment r;
  r.ttc = 0.0;
  r.inv_ttc = kInfinity;
  r.tm = 0.0;
  r.obvious = ObviousRisk::OR3;
  r.potential = PotentialRisk::PR3;
  r.level = RiskLevel::RL3;
  return r;
}

// kappa at k+1 ... k+Np, given the state already advanced to k+1.
void privilege_horizon(
  const PrivilegeState & next, int Np, std::vector<double> & k1, std::vector<double> & k2)
{
  k1.assign(1, next.kappa1);
  const std::vector<double> rest = future_kappa1(next, Np - 1);
  k1.insert(k1.end(), rest.begin(), rest.end());
  k2.resize(k1.size());
  for (std::size_t i = 0; i < k1.size(); ++i) {
    k2[i] = split_privilege(next.total, k1[i]).second;
  }
}

void record_handover(
  const PrivilegeState & before, const PrivilegeState & after, RiskLevel level, double time,
  double step_time, SimLog & log)
{
  if (!after.active_schedule) {
    return;
  }
  const WeightSchedule & s = *after.active_schedule;
  const bool fresh = s.start_step == before.step &&
                     (!before.active_schedule || before.active_schedule->start_step != before.step);
  if (!fresh) {
    return;
  }
  HandoverEvent e;
  e.time = time;
  e.kind = after.schedule_kind;
  e.level = level;
  e.duration = static_cast<double>(s.end_step - s.start_step) * step_time;
  log.handovers.push_back(e);
}

// Single actuator shared by both players: saturate the sum and scale the two
// contributions by the same factor.
void saturate_shared(double & u1, double & u2, double sat)
{
  const double total = u1 + u2;
  if (std::abs(total) > sat && total != 0.0) {
    const double f = sat / std::abs(total);
    u1 *= f;
    u2 *= f;
  }
}

PrivilegeState make_privilege(const ScenarioConfig & c)
{
  return initial_privilege(c.controller.total_privilege, 0);
}

HandoverPolicy make_policy(const ScenarioConfig & c)
{
  HandoverPolicy p = c.policy;
  p.step_time = c.step_time;
  return p;
}

Step step_count(const ScenarioConfig & c)
{
  return static_cast<Step>(std::llround(c.duration / c.step_time));
}

}  // namespace

SimLog run_lane_change(const ScenarioConfig & c)
{
  if (c.kind != ScenarioKind::LaneChange) {
    throw ConfigError("run_lane_change: config kind is not lane_change");
  }
  validate(c);

  const double T = c.step_time;
  const double vh = c.host_speed;
  const int Np = c.controller.Np;
  const HandoverPolicy policy = make_policy(c);

  const DiscreteJointModel model = discretize(lateral_continuous(c.vehicle, vh), T);

  auto driver_target = [&](Step k) -> Eigen::VectorXd {
    const double t = static_cast<double>(k) * T - c.maneuver_start;
    if (t <= 0.0) {
      return Eigen::Vector2d::Zero();
    }
    return lane_change_profile(c.maneuver_length, c.lane_width, vh, t);
  };
  const Eigen::VectorXd keep_lane = Eigen::Vector2d::Zero();

  std::vector<Eigen::VectorXd> d0;
  std::vector<Eigen::VectorXd> s0;
  for (int i = 0; i < Np; ++i) {
    d0.push_back(driver_target(i));
    s0.push_back(keep_lane);
  }
  RecedingController ctrl(model, c.controller, make_targets(d0), make_targets(s0));

  SimLog log;
  log.kind = ScenarioKind::LaneChange;
  log.step_time = T;

  Eigen::VectorXd x = Eigen::Vector4d::Zero();
  const Eigen::VectorXd D = Eigen::VectorXd::Zero(ctrl.prediction().Xi.cols());
  const Eigen::VectorXd no_w = Eigen::VectorXd::Zero(0);
  PrivilegeState priv = make_privilege(c);
  bool conflict = false;
  std::vector<double> k1;
  std::vector<double> k2;

  const Step steps = step_count(c);
  log.rows.reserve(static_cast<std::size_t>(steps) + 1);
  for (Step k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * T;
    SimRow row;
    row.time = t;
    row.lateral = LateralState::from(x);
    row.longitudinal.v_x = vh;
    row.kappa1 = priv.kappa1;
    row.kappa2 = priv.kappa2;

    // Rear traffic in the adjacent lane only matters once the host edge is
    // about to reach the lane line; the conflict then lasts while the driver
    // still wants to change lanes.
    RiskAssessment risk = no_risk();
    if (c.target) {
      const double rel = c.target->initial_gap + (c.target->speed - vh) * t;
      row.longitudinal.d_x = rel;
      const double edge =
        c.gate_reference == GateReference::NearEdge ? x(0) + 0.5 * c.vehicle_width : x(0);
      if (!conflict) {
        const double to_line = 0.5 * c.lane_width - edge;
        const double rate = x(1) + vh * x(2);
        conflict = cut_in_gate({c.lane_width, to_line}) ||
                   (rate > 0.0 && to_line <= rate * c.line_crossing_time);
      }
      if (conflict) {
        if (rel < -c.vehicle_length) {
          KinematicPair pair;
          pair.gap = -rel - c.vehicle_length;
          pair.host_speed = c.target->speed;
          pair.target_speed = vh;
          pair.host_decel = c.target_decel;
          pair.target_decel = c.host_decel;
          risk = assess(pair, c.thresholds);
        } else if (rel < c.vehicle_length) {
          risk = contact_risk();
        }
      }
    }
    row.rl = risk.level;
    row.or_lvl = risk.obvious;
    row.pr_lvl = risk.potential;
    row.ttc = risk.ttc;
    row.tm = risk.tm;

    if (k == steps) {
      row.t1_0 = ctrl.driver_targets().block(0)(0);
      row.t2_0 = ctrl.system_targets().block(0)(0);
      log.rows.push_back(row);
      break;
    }

    const PrivilegeState next = step_privilege(priv, risk.level, c.takeover_intent, policy);
    record_handover(priv, next, risk.level, t, T, log);
    privilege_horizon(next, Np, k1, k2);

    const RecedingOutput out = ctrl.step(x, D, driver_target(k + Np), keep_lane, k1, k2);
    if (!out.solution.exists) {
      throw NashNonExistence(k, out.solution.condition);
    }
    double uD = out.u_D(0);
    double uA = out.u_A(0);
    saturate_shared(uD, uA, c.limits.max_steer);
    row.u_d = uD;
    row.u_a = uA;
    row.t1_0 = ctrl.driver_targets().block(0)(0);
    row.t2_0 = ctrl.system_targets().block(0)(0);
    log.rows.push_back(row);

    x = step_plant(model, x, Eigen::VectorXd::Constant(1, uD), Eigen::VectorXd::Constant(1, uA),
                   no_w);
    priv = next;
  }
  return log;
}

SimLog run_cut_in(const ScenarioConfig & c)
{
  if (c.kind != ScenarioKind::CutIn) {
    throw ConfigError("run_cut_in: config kind is not cut_in");
  }
  validate(c);

  const double T = c.step_time;
  const double v0 = c.host_speed;
  const double vt = c.target->speed;
  const int Np = c.controller.Np;
  const double horizon = static_cast<double>(Np) * T;
  const HandoverPolicy policy = make_policy(c);

  const DiscreteJointModel model = discretize(longitudinal_continuous(), T);

  Eigen::VectorXd x(2);
  x << c.target->initial_gap, v0;

  // Speed keeping: the driver does not attend to the gap, so its gap target
  // is wherever the gap would drift at the current speed.
  auto driver_target = [&](const Eigen::VectorXd & s) -> Eigen::VectorXd {
    return Eigen::Vector2d(s(0) + (vt - s(1)) * horizon, v0);
  };
  // Gap at which the time margin sits on the no-risk boundary.
  auto system_target = [&](const Eigen::VectorXd & s) -> Eigen::VectorXd {
    const double vh = std::max(s(1), 0.0);
    const double gap = c.thresholds.tm_bounds.pr1 * vh + vh * vh / (2.0 * c.host_decel) -
                       vt * vt / (2.0 * c.target_decel);
    return Eigen::Vector2d(gap, vt);
  };

  std::vector<Eigen::VectorXd> d0;
  for (int i = 0; i < Np; ++i) {
    Eigen::VectorXd s = x;
    s(0) += (vt - v0) * static_cast<double>(i) * T;
    d0.push_back(Eigen::Vector2d(s(0), v0));
  }
  RecedingController ctrl(model, c.controller, make_targets(d0), make_targets(d0));

  SimLog log;
  log.kind = ScenarioKind::CutIn;
  log.step_time = T;

  const Eigen::VectorXd D = Eigen::VectorXd::Constant(ctrl.prediction().Xi.cols(), vt);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(model.disturbance_dim(), vt);
  const double edge_shift =
    c.gate_reference == GateReference::NearEdge ? 0.0 : 0.5 * c.vehicle_width;
  PrivilegeState priv = make_privilege(c);
  bool in_lane = false;
  std::vector<double> k1;
  std::vector<double> k2;

  const Step steps = step_count(c);
  log.rows.reserve(static_cast<std::size_t>(steps) + 1);
  for (Step k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * T;
    SimRow row;
    row.time = t;
    row.longitudinal = LongitudinalState::from(x);
    row.kappa1 = priv.kappa1;
    row.kappa2 = priv.kappa2;

    if (!in_lane) {
      const double offset =
        c.cut_in.initial_lateral_offset + edge_shift - c.cut_in.lateral_speed * t;
      in_lane = cut_in_gate({c.lane_width, offset});
    }
    RiskAssessment risk = no_risk();
    if (in_lane) {
      if (x(0) <= 0.0) {
        risk = contact_risk();
      } else {
        KinematicPair pair;
        pair.gap = x(0);
        pair.host_speed = std::max(x(1), 0.0);
        pair.target_speed = vt;
        pair.host_decel = c.host_decel;
        pair.target_decel = c.target_decel;
        risk = assess(pair, c.thresholds);
      }
    }
    row.rl = risk.level;
    row.or_lvl = risk.obvious;
    row.pr_lvl = risk.potential;
    row.ttc = risk.ttc;
    row.tm = risk.tm;

    if (k == steps) {
      row.t1_0 = ctrl.driver_targets().block(0)(0);
      row.t2_0 = ctrl.system_targets().block(0)(0);
      log.rows.push_back(row);
      break;
    }

    const PrivilegeState next = step_privilege(priv, risk.level, c.takeover_intent, policy);
    record_handover(priv, next, risk.level, t, T, log);
    privilege_horizon(next, Np, k1, k2);

    const Eigen::VectorXd t1 = driver_target(x);
    const Eigen::VectorXd t2 = in_lane ? system_target(x) : t1;
    const RecedingOutput out = ctrl.step(x, D, t1, t2, k1, k2);
    if (!out.solution.exists) {
      throw NashNonExistence(k, out.solution.condition);
    }
    double uD = out.u_D(0);
    double uA = out.u_A(0);
    const double total = uD + uA;
    const double sat = saturate_accel(total, c.limits);
    if (total != 0.0 && sat != total) {
      uD *= sat / total;
      uA *= sat / total;
    }
    row.u_d = uD;
    row.u_a = uA;
    row.t1_0 = ctrl.driver_targets().block(0)(0);
    row.t2_0 = ctrl.system_targets().block(0)(0);
    log.rows.push_back(row);

    x = step_plant(model, x, Eigen::VectorXd::Constant(1, uD), Eigen::VectorXd::Constant(1, uA), w);
    priv = next;
  }
  return log;
}

SimLog run_scenario(const ScenarioConfig & config)
{
  return config.kind == ScenarioKind::LaneChange ? run_lane_change(config) : run_cut_in(config);
}

RunSummary summarize(const ScenarioConfig & config, const SimLog & log)
{
  RunSummary s;
  s.name = config.name;
  s.handovers = log.handovers;
  if (config.target) {
    s.target_speed = config.target->speed;
  }
  if (log.rows.empty()) {
    return s;
  }
  s.duration = log.rows.back().time;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const SimRow & r = log.rows[i];
    if (!s.first_risk_time && r.rl != RiskLevel::RL0) {
      s.first_risk_time = r.time;
      s.first_risk_level = r.rl;
    }
    s.max_abs_dy = std::max(s.max_abs_dy, std::abs(r.lateral.d_y));
    if (log.kind == ScenarioKind::LaneChange) {
      s.max_abs_steer = std::max(s.max_abs_steer, std::abs(r.u_d + r.u_a));
    } else {
      s.min_gap = s.min_gap ? std::min(*s.min_gap, r.longitudinal.d_x) : r.longitudinal.d_x;
      if (r.longitudinal.d_x <= 0.0) {
        s.collision = true;
      }
      if (i > 0) {
        const double decel = (log.rows[i - 1].longitudinal.v_x - r.longitudinal.v_x) / log.step_time;
        s.peak_decel = std::max(s.peak_decel, decel);
      }
    }
  }
  s.final_dy = log.rows.back().lateral.d_y;
  s.final_speed = log.rows.back().longitudinal.v_x;
  return s;
}

}  // namespace handover
