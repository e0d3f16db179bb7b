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

#ifndef HANDOVER__SCENARIO_HPP_
#define HANDOVER__SCENARIO_HPP_

#include "handover/game_mpc.hpp"
#include "handover/plant.hpp"
#include "handover/privilege.hpp"
#include "handover/risk.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace handover
{

enum class ScenarioKind : std::uint8_t { LaneChange, CutIn };

enum class GateReference : std::uint8_t { NearEdge, Centerline };

struct TargetVehicle
{
  // Longitudinal offset of the target's nearest point from the host front
  // bumper; negative values are behind the host.
  double initial_gap{10.0};
  double speed{0.0};
};

struct CutInMotion
{
  // Lateral distance of the target's reference point outside the ego lane
  // line at t = 0, and the rate at which it closes.
  double initial_lateral_offset{0.5};
  double lateral_speed{1.0};
};

struct ScenarioConfig
{
  ScenarioKind kind{ScenarioKind::LaneChange};
  std::string name{};
  double host_speed{20.0};
  std::optional<TargetVehicle> target{};

  double lane_width{3.5};
  double maneuver_length{80.0};
  double maneuver_start{2.0};
  CutInMotion cut_in{};
  GateReference gate_reference{GateReference::NearEdge};
  // Lane change: rear traffic counts once the host is predicted to reach the
  // lane line within this time at its current lateral rate. 0 waits for the
  // actual crossing.
  double line_crossing_time{1.0};

  double vehicle_length{4.6};
  double vehicle_width{1.8};
  VehicleParams vehicle{};
  ActuatorLimits limits{};

  ControllerSettings controller{};
  double step_time{0.01};
  double duration{10.0};

  RiskThresholds thresholds{};
  double host_decel{kDefaultDecel};
  double target_decel{kDefaultDecel};
  HandoverPolicy policy{};
  // Driver monitor reading once the danger has passed; none keeps the
  // privilege with the system.
  std::optional<bool> takeover_intent{};
};

/// Throws ConfigError describing the first violated constraint.
void validate(const ScenarioConfig & config);

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class NashNonExistence : public std::runtime_error
{
public:
  NashNonExistence(Step step, double condition);
  Step step() const { return step_; }
  double condition() const { return condition_; }

private:
  Step step_;
  double condition_;
};

struct SimRow
{
  double time{0.0};
  LateralState lateral{};
  LongitudinalState longitudinal{};
  double kappa1{0.0};
  double kappa2{0.0};
  RiskLevel rl{RiskLevel::RL0};
  ObviousRisk or_lvl{ObviousRisk::OR0};
  PotentialRisk pr_lvl{PotentialRisk::PR0};
  double ttc{kInfinity};
  double tm{kInfinity};
  double u_d{0.0};
  double u_a{0.0};
  double t1_0{0.0};
  double t2_0{0.0};
};

struct HandoverEvent
{
  double time{0.0};
  ScheduleKind kind{ScheduleKind::Takeover};
  RiskLevel level{RiskLevel::RL0};
  double duration{0.0};
};

struct SimLog
{
  ScenarioKind kind{ScenarioKind::LaneChange};
  double step_time{0.01};
  std::vector<SimRow> rows;
  std::vector<HandoverEvent> handovers;
};

struct RunSummary
{
  std::string name;
  double duration{0.0};
  std::optional<double> first_risk_time{};
  std::optional<RiskLevel> first_risk_level{};
  std::vector<HandoverEvent> handovers;
  std::optional<double> min_gap{};
  double peak_decel{0.0};
  double max_abs_steer{0.0};
  double max_abs_dy{0.0};
  double final_dy{0.0};
  double final_speed{0.0};
  std::optional<double> target_speed{};
  bool collision{false};
};

/// Quintic lane change [d_y, psi] at time `t` after the manoeuvre starts;
/// clamped to the end points outside [0, length / speed].
Eigen::Vector2d lane_change_profile(double length, double width, double speed, double t);

SimLog run_lane_change(const ScenarioConfig & config);
SimLog run_cut_in(const ScenarioConfig & config);
SimLog run_scenario(const ScenarioConfig & config);

RunSummary summarize(const ScenarioConfig & config, const SimLog & log);

// ---- file formats ---------------------------------------------------------

ScenarioConfig config_from_json(const std::string & text);
ScenarioConfig load_config(const std::string & path);

RiskThresholds thresholds_from_json(const std::string & text);
std::string thresholds_to_json(const RiskThresholds & thr);

inline constexpr const char * kSimLogHeader =
  "time,d_y,v_y,psi,omega,d_x,v_x,kappa1,kappa2,rl,or_lvl,pr_lvl,ttc,tm,u_d,u_a,t1_0,t2_0";

void write_log_csv(const SimLog & log, std::ostream & out);
void write_summary(const RunSummary & summary, std::ostream & out);

}  // namespace handover

#endif  // HANDOVER__SCENARIO_HPP_
