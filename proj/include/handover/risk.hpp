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

#ifndef HANDOVER__RISK_HPP_
#define HANDOVER__RISK_HPP_

#include <cstdint>
#include <limits>
#include <string_view>

namespace handover
{

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Relative speeds (and host speeds) at or below this are treated as
// non-closing / stationary and yield an infinite TTC or TM.
inline constexpr double kSpeedEpsilon = 1e-3;

// Friction-limited braking used for both vehicles unless configured.
inline constexpr double kDefaultDecel = 7.0;

/// Longitudinal relation between a following (host) vehicle and the vehicle
/// it follows. Decelerations are magnitudes.
struct KinematicPair
{
  double gap{0.0};           // bumper to bumper [m], > 0
  double host_speed{0.0};    // [m/s], >= 0
  double target_speed{0.0};  // [m/s], >= 0
  double host_decel{kDefaultDecel};
  double target_decel{kDefaultDecel};
};

/// Throws std::domain_error when the pair is not a physical car-following
/// configuration (overlap, negative speed, non-positive decel).
void validate(const KinematicPair & pair);

struct IttcIntercepts
{
  double c5{0.49};
  double c50{1.18};
  double c95{1.73};
};

struct IttcFloors
{
  double thr1{0.33};
  double thr2{0.66};
  double thr3{1.0};
};

struct TmBounds
{
  double pr1{1.4};
  double pr2{0.5};
  double pr3{0.0};
};

struct RiskThresholds
{
  double ittc_slope{-0.0717};  // [1/s per m/s]
  IttcIntercepts ittc_intercepts{};
  IttcFloors ittc_floors{};
  TmBounds tm_bounds{};
};

/// Throws std::invalid_argument unless the three orderings hold.
void validate(const RiskThresholds & thr);

enum class ObviousRisk : std::uint8_t { OR0 = 0, OR1, OR2, OR3 };
enum class PotentialRisk : std::uint8_t { PR0 = 0, PR1, PR2, PR3 };
enum class RiskLevel : std::uint8_t { RL0 = 0, RL1, RL2, RL3 };

constexpr int to_int(ObviousRisk v) { return static_cast<int>(v); }
constexpr int to_int(PotentialRisk v) { return static_cast<int>(v); }
constexpr int to_int(RiskLevel v) { return static_cast<int>(v); }

std::string_view to_string(RiskLevel level);

/// Throws std::invalid_argument for anything outside 0..3.
RiskLevel risk_level_from_int(int value);

struct RiskAssessment
{
  double ttc{kInfinity};
  double inv_ttc{0.0};
  double tm{kInfinity};
  ObviousRisk obvious{ObviousRisk::OR0};
  PotentialRisk potential{PotentialRisk::PR0};
  RiskLevel level{RiskLevel::RL0};
};

/// Gap over closing speed, +inf when not closing.
double ttc(const KinematicPair & pair);

/// Longest reaction delay after which the host can still stop behind a
/// target that brakes to standstill now. Negative when even an immediate
/// full brake is too late; +inf for a stationary host.
double time_margin(const KinematicPair & pair);

/// Velocity-dependent 1/TTC boundaries, each floored by its minimum.
struct ObviousBoundaries
{
  double or1{0.0};
  double or2{0.0};
  double or3{0.0};
};
ObviousBoundaries obvious_boundaries(double host_speed, const RiskThresholds & thr);

ObviousRisk obvious_risk(double inv_ttc, double host_speed, const RiskThresholds & thr);
PotentialRisk potential_risk(double tm, const RiskThresholds & thr);

// Strict precedence RL3 > RL2 > RL1 > RL0:
//   RL3  PR3 or OR3
//   RL2  PR2 or OR2
//   RL1  PR1 and OR1
//   RL0  otherwise
RiskLevel combined_risk(ObviousRisk obvious, PotentialRisk potential);

RiskAssessment assess(const KinematicPair & pair, const RiskThresholds & thr);

struct LaneGeometry
{
  double lane_width{3.5};
  // Signed lateral distance of the target's reference point (near edge by
  // default) from the ego lane boundary; positive means outside the lane.
  double target_lateral_offset{0.0};
};

/// True once the target has reached the ego lane line; from then on the
/// car-following assessment applies.
bool cut_in_gate(const LaneGeometry & geom);

}  // namespace handover

#endif  // HANDOVER__RISK_HPP_
