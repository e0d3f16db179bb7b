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

#include "handover/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace handover
{

void validate(const KinematicPair & pair)
{
  if (!(pair.gap > 0.0)) {
    throw std::domain_error("kinematic pair: gap must be > 0 (vehicles overlap)");
  }
  if (!(pair.host_speed >= 0.0) || !(pair.target_speed >= 0.0)) {
    throw std::domain_error("kinematic pair: speeds must be >= 0");
  }
  if (!(pair.host_decel > 0.0) || !(pair.target_decel > 0.0)) {
    throw std::domain_error("kinematic pair: deceleration limits must be > 0");
  }
}

void validate(const RiskThresholds & thr)
{
  const auto & c = thr.ittc_intercepts;
  const auto & f = thr.ittc_floors;
  const auto & b = thr.tm_bounds;
  if (!(c.c5 < c.c50 && c.c50 < c.c95)) {
    throw std::invalid_argument("thresholds: require c5 < c50 < c95");
  }
  if (!(f.thr1 < f.thr2 && f.thr2 < f.thr3)) {
    throw std::invalid_argument("thresholds: require thr1 < thr2 < thr3");
  }
  if (!(b.pr3 < b.pr2 && b.pr2 < b.pr1)) {
    throw std::invalid_argument("thresholds: require pr3 < pr2 < pr1");
  }
  if (!std::isfinite(thr.ittc_slope)) {
    throw std::invalid_argument("thresholds: slope must be finite");
  }
}

std::string_view to_string(RiskLevel level)
{
  switch (level) {
    case RiskLevel::RL0:
      return "RL0";
    case RiskLevel::RL1:
      return "RL1";
    case RiskLevel::RL2:
      return "RL2";
    case RiskLevel::RL3:
      return "RL3";
  }
  return "RL?";
}

RiskLevel risk_level_from_int(int value)
{
  if (value < 0 || value > 3) {
    throw std::invalid_argument("risk level out of range: " + std::to_string(value));
  }
  return static_cast<RiskLevel>(value);
}

double ttc(const KinematicPair & pair)
{
  validate(pair);
  const double closing = pair.host_speed - pair.target_speed;
  if (closing <= kSpeedEpsilon) {
    return kInfinity;
  }
  return pair.gap / closing;
}

double time_margin(const KinematicPair & pair)
{
  validate(pair);
  if (pair.host_speed <= kSpeedEpsilon) {
    return kInfinity;
  }
  const double target_stop = pair.target_speed * pair.target_speed / (2.0 * pair.target_decel);
  const double host_stop = pair.host_speed * pair.host_speed / (2.0 * pair.host_decel);
  return (pair.gap + target_stop - host_stop) / pair.host_speed;
}

ObviousBoundaries obvious_boundaries(double host_speed, const RiskThresholds & thr)
{
  const double base = thr.ittc_slope * host_speed;
  return {
    std::max(base + thr.ittc_intercepts.c5, thr.ittc_floors.thr1),
    std::max(base + thr.ittc_intercepts.c50, thr.ittc_floors.thr2),
    std::max(base + thr.ittc_intercepts.c95, thr.ittc_floors.thr3),
  };
}

ObviousRisk obvious_risk(double inv_ttc, double host_speed, const RiskThresholds & thr)
{
  const auto b = obvious_boundaries(host_speed, thr);
  if (inv_ttc >= b.or3) {
    return ObviousRisk::OR3;
  }
  if (inv_ttc >= b.or2) {
    return ObviousRisk::OR2;
  }
  if (inv_ttc >= b.or1) {
    return ObviousRisk::OR1;
  }
  return ObviousRisk::OR0;
}

PotentialRisk potential_risk(double tm, const RiskThresholds & thr)
{
  const auto & b = thr.tm_bounds;
  if (tm <= b.pr3) {
    return PotentialRisk::PR3;
  }
  if (tm <= b.pr2) {
    return PotentialRisk::PR2;
  }
  if (tm <= b.pr1) {
    return PotentialRisk::PR1;
  }
  return PotentialRisk::PR0;
}

RiskLevel combined_risk(ObviousRisk obvious, PotentialRisk potential)
{
  if (obvious == ObviousRisk::OR3 || potential == PotentialRisk::PR3) {
    return RiskLevel::RL3;
  }
  if (obvious == ObviousRisk::OR2 || potential == PotentialRisk::PR2) {
    return RiskLevel::RL2;
  }
  if (obvious == ObviousRisk::OR1 && potential == PotentialRisk::PR1) {
    return RiskLevel::RL1;
  }
  return RiskLevel::RL0;
}

RiskAssessment assess(const KinematicPair & pair, const RiskThresholds & thr)
{
  RiskAssessment out;
  out.ttc = ttc(pair);
  out.inv_ttc = std::isinf(out.ttc) ? 0.0 : 1.0 / out.ttc;
  out.tm = time_margin(pair);
  out.obvious = obvious_risk(out.inv_ttc, pair.host_speed, thr);
  out.potential = potential_risk(out.tm, thr);
  out.level = combined_risk(out.obvious, out.potential);
  return out;
}

bool cut_in_gate(const LaneGeometry & geom)
{
  if (!(geom.lane_width > 0.0)) {
    throw std::invalid_argument("lane geometry: lane width must be > 0");
  }
  return geom.target_lateral_offset <= 0.0;
}

}  // namespace handover
