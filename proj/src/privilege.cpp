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

#include "handover/privilege.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace handover
{

void validate(const WeightSchedule & sched)
{
  if (!(sched.total > 0.0)) {
    throw std::invalid_argument("weight schedule: total privilege must be > 0");
  }
  if (sched.end_step < sched.start_step) {
    throw std::invalid_argument("weight schedule: end step precedes start step");
  }
  const auto in_range = [&](double w) { return w >= 0.0 && w <= sched.total; };
  if (!in_range(sched.start_weight) || !in_range(sched.end_weight)) {
    throw std::invalid_argument("weight schedule: weights must lie in [0, total]");
  }
}

double weight_at(const WeightSchedule & sched, Step k)
{
  if (k < sched.start_step) {
    return sched.start_weight;
  }
  if (k >= sched.end_step) {
    return sched.end_weight;
  }
  const double frac =
    static_cast<double>(k - sched.start_step) / static_cast<double>(sched.length());
  return sched.start_weight + (sched.end_weight - sched.start_weight) * frac;
}

double HandoverPolicy::take_duration(RiskLevel level) const
{
  switch (level) {
    case RiskLevel::RL1:
      return take_rl1;
    case RiskLevel::RL2:
      return take_rl2;
    case RiskLevel::RL3:
      return take_rl3;
    case RiskLevel::RL0:
      break;
  }
  throw std::invalid_argument("handover policy: no takeover at RL0");
}

double HandoverPolicy::return_duration(ReturnMode mode) const
{
  return mode == ReturnMode::Intent ? return_intent : return_no_intent;
}

void validate(const HandoverPolicy & policy)
{
  for (double d : {policy.take_rl1, policy.take_rl2, policy.take_rl3, policy.return_intent,
                   policy.return_no_intent, policy.step_time}) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("handover policy: durations and step time must be > 0");
    }
  }
}

Step duration_steps(double duration, double step_time)
{
  return static_cast<Step>(std::llround(duration / step_time));
}

namespace
{

WeightSchedule make_schedule(double from, double to, Step k0, Step steps, double total)
{
  WeightSchedule s{from, to, k0, k0 + steps, total};
  validate(s);
  return s;
}

}  // namespace

WeightSchedule plan_takeover(
  double current_kappa1, RiskLevel level, const HandoverPolicy & policy, Step now_step,
  double total)
{
  if (level == RiskLevel::RL0) {
    throw std::invalid_argument("plan_takeover: no takeover at RL0");
  }
  validate(policy);
  const Step k = duration_steps(policy.take_duration(level), policy.step_time);
  return make_schedule(current_kappa1, 0.0, now_step, k, total);
}

WeightSchedule plan_return(
  ReturnMode mode, const HandoverPolicy & policy, Step now_step, double current_kappa1,
  double total)
{
  validate(policy);
  const Step k = duration_steps(policy.return_duration(mode), policy.step_time);
  return make_schedule(current_kappa1, total, now_step, k, total);
}

std::pair<double, double> split_privilege(double total, double kappa1)
{
  const double spacing = std::nextafter(total, std::numeric_limits<double>::infinity()) - total;
  double snapped = std::round(kappa1 / spacing) * spacing;
  snapped = std::clamp(snapped, 0.0, total);
  return {snapped, total - snapped};
}

PrivilegeState initial_privilege(double total, Step step)
{
  PrivilegeState s;
  s.total = total;
  s.kappa1 = total;
  s.kappa2 = 0.0;
  s.step = step;
  return s;
}

PrivilegeState step_privilege(
  const PrivilegeState & state, RiskLevel level, std::optional<bool> takeover_intent,
  const HandoverPolicy & policy)
{
  PrivilegeState next = state;
  const Step k = state.step;

  const bool escalated =
    level != RiskLevel::RL0 && (!state.takeover_level || level > *state.takeover_level);

  if (escalated) {
    next.takeover_level = level;
    if (state.kappa1 > 0.0) {
      WeightSchedule plan = plan_takeover(state.kappa1, level, policy, k, state.total);
      // A faster level must not leave the driver in control for longer than
      // the takeover already under way would.
      if (state.active_schedule && state.schedule_kind == ScheduleKind::Takeover &&
          state.active_schedule->end_step > k) {
        plan.end_step = std::min(plan.end_step, state.active_schedule->end_step);
      }
      next.active_schedule = plan;
      next.schedule_kind = ScheduleKind::Takeover;
    }
  } else if (level == RiskLevel::RL0 && state.takeover_level && takeover_intent.has_value()) {
    const bool takeover_done =
      state.kappa1 == 0.0 &&
      (!state.active_schedule || state.active_schedule->end_step <= k);
    if (takeover_done) {
      const ReturnMode mode = *takeover_intent ? ReturnMode::Intent : ReturnMode::NoIntent;
      next.active_schedule = plan_return(mode, policy, k, state.kappa1, state.total);
      next.schedule_kind = ScheduleKind::Return;
      next.takeover_level.reset();
    }
  }

  next.step = k + 1;
  const double raw = next.active_schedule ? weight_at(*next.active_schedule, next.step)
                                          : state.kappa1;
  std::tie(next.kappa1, next.kappa2) = split_privilege(state.total, raw);
  return next;
}

std::vector<double> future_kappa1(const PrivilegeState & state, int count)
{
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 1; i <= count; ++i) {
    const double raw =
      state.active_schedule ? weight_at(*state.active_schedule, state.step + i) : state.kappa1;
    out.push_back(split_privilege(state.total, raw).first);
  }
  return out;
}

}  // namespace handover
