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

#ifndef HANDOVER__PRIVILEGE_HPP_
#define HANDOVER__PRIVILEGE_HPP_

#include "handover/risk.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace handover
{

using Step = std::int64_t;

inline constexpr double kDefaultTotalPrivilege = 0.1;

/// Linear driver-weight ramp from `start_weight` at `start_step` to
/// `end_weight` at `end_step`, constant outside.
struct WeightSchedule
{
  double start_weight{kDefaultTotalPrivilege};
  double end_weight{kDefaultTotalPrivilege};
  Step start_step{0};
  Step end_step{0};
  double total{kDefaultTotalPrivilege};

  Step length() const { return end_step - start_step; }
};

void validate(const WeightSchedule & sched);

/// Driver weight kappa1 at step k.
double weight_at(const WeightSchedule & sched, Step k);

enum class ReturnMode : std::uint8_t { Intent, NoIntent };

struct HandoverPolicy
{
  double take_rl1{3.0};  // [s]
  double take_rl2{1.0};
  double take_rl3{0.5};
  double return_intent{2.0};
  double return_no_intent{6.0};
  double step_time{0.01};

  double take_duration(RiskLevel level) const;
  double return_duration(ReturnMode mode) const;
};

void validate(const HandoverPolicy & policy);

/// Number of steps a duration spans at the policy step time.
Step duration_steps(double duration, double step_time);

WeightSchedule plan_takeover(
  double current_kappa1, RiskLevel level, const HandoverPolicy & policy, Step now_step,
  double total = kDefaultTotalPrivilege);

WeightSchedule plan_return(
  ReturnMode mode, const HandoverPolicy & policy, Step now_step, double current_kappa1,
  double total = kDefaultTotalPrivilege);

enum class ScheduleKind : std::uint8_t { Takeover, Return };

struct PrivilegeState
{
  double kappa1{kDefaultTotalPrivilege};
  double kappa2{0.0};
  double total{kDefaultTotalPrivilege};
  Step step{0};
  std::optional<WeightSchedule> active_schedule{};
  ScheduleKind schedule_kind{ScheduleKind::Takeover};
  // Highest level acted on by the takeover in progress (or completed and
  // not yet returned).
  std::optional<RiskLevel> takeover_level{};
};

/// Full driver privilege at step `step`.
PrivilegeState initial_privilege(double total = kDefaultTotalPrivilege, Step step = 0);

/// kappa1 and total - kappa1 with kappa1 snapped to the spacing of `total`,
/// so that the two weights sum to `total` without rounding error.
std::pair<double, double> split_privilege(double total, double kappa1);

/// Advance one step. `level` is the risk observed at the current step;
/// `takeover_intent` is the driver monitor reading, if any. A return to the
/// driver starts only once a takeover has run to completion, the risk is
/// back at RL0 and a monitor reading is available to pick the return mode.
PrivilegeState step_privilege(
  const PrivilegeState & state, RiskLevel level, std::optional<bool> takeover_intent,
  const HandoverPolicy & policy);

/// kappa1 at steps state.step + 1 ... state.step + count under the active
/// schedule (held at the current value when there is none).
std::vector<double> future_kappa1(const PrivilegeState & state, int count);

}  // namespace handover

#endif  // HANDOVER__PRIVILEGE_HPP_
