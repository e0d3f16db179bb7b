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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

using namespace handover;

namespace
{

std::string config_path(const std::string & stem)
{
  return std::string(HANDOVER_SOURCE_DIR) + "/configs/scenarios/" + stem + ".json";
}

RunSummary run(const std::string & stem, SimLog * log_out = nullptr)
{
  const ScenarioConfig c = load_config(config_path(stem));
  SimLog log = run_scenario(c);
  RunSummary s = summarize(c, log);
  if (log_out) {
    *log_out = std::move(log);
  }
  return s;
}

}  // namespace

TEST_CASE("quintic lane change profile")
{
  const auto start = lane_change_profile(80, 3.5, 20, 0.0);
  CHECK(start(0) == 0.0);
  CHECK(start(1) == 0.0);
  const auto mid = lane_change_profile(80, 3.5, 20, 2.0);
  CHECK(mid(0) == doctest::Approx(1.75));
  // peak slope 15 W / (8 L)
  CHECK(std::tan(mid(1)) == doctest::Approx(15.0 * 3.5 / (8.0 * 80.0)));
  const auto end = lane_change_profile(80, 3.5, 20, 4.0);
  CHECK(end(0) == doctest::Approx(3.5));
  CHECK(std::abs(end(1)) < 1e-15);
  CHECK(lane_change_profile(80, 3.5, 20, 9.0)(0) == doctest::Approx(3.5));
  CHECK(lane_change_profile(80, 3.5, 20, -1.0)(0) == 0.0);
}

TEST_CASE("lane change with rear traffic hands over and returns to lane")
{
  SimLog log;
  const RunSummary s = run("lane_change_case1", &log);
  REQUIRE(s.first_risk_time.has_value());
  CHECK(*s.first_risk_time == doctest::Approx(3.2).epsilon(0.3 / 3.2));
  REQUIRE_FALSE(s.handovers.empty());
  CHECK(s.handovers.front().kind == ScheduleKind::Takeover);
  CHECK(std::abs(s.final_dy) <= 0.2);
  CHECK(s.max_abs_steer <= 0.3);
  for (const SimRow & r : log.rows) {
    CHECK(r.kappa1 + r.kappa2 == 0.1);
  }
}

TEST_CASE("lane change second case is later")
{
  const RunSummary s = run("lane_change_case2");
  REQUIRE(s.first_risk_time.has_value());
  CHECK(std::abs(*s.first_risk_time - 4.9) <= 0.3);
  CHECK(std::abs(s.final_dy) <= 0.2);
}

TEST_CASE("lane change without traffic completes")
{
  const RunSummary s = run("lane_change_clear");
  CHECK_FALSE(s.first_risk_time.has_value());
  CHECK(s.handovers.empty());
  CHECK(s.final_dy == doctest::Approx(3.5).epsilon(0.02));
}

TEST_CASE("cut-in cases")
{
  const RunSummary a = run("cut_in_case1");
  REQUIRE(a.first_risk_level.has_value());
  CHECK(*a.first_risk_level == RiskLevel::RL1);
  CHECK(std::abs(*a.first_risk_time - 0.5) <= 0.3);
  REQUIRE(a.min_gap.has_value());
  CHECK(*a.min_gap > 0.0);
  CHECK_FALSE(a.collision);
  CHECK(std::abs(a.final_speed - *a.target_speed) <= 0.5);

  const RunSummary b = run("cut_in_case2");
  REQUIRE(b.first_risk_level.has_value());
  CHECK(*b.first_risk_level == RiskLevel::RL2);
  CHECK(std::abs(*b.first_risk_time - 0.6) <= 0.3);
  CHECK(*b.min_gap > 0.0);
  CHECK(std::abs(b.final_speed - *b.target_speed) <= 0.5);
  CHECK(b.peak_decel > a.peak_decel);

  const RunSummary c = run("cut_in_clear");
  CHECK_FALSE(c.first_risk_time.has_value());
}

TEST_CASE("takeover ramp length follows the first risk level")
{
  const RunSummary a = run("cut_in_case1");
  REQUIRE_FALSE(a.handovers.empty());
  CHECK(a.handovers.front().duration == doctest::Approx(3.0));
  const RunSummary b = run("cut_in_case2");
  REQUIRE_FALSE(b.handovers.empty());
  CHECK(b.handovers.front().duration == doctest::Approx(1.0));
}

TEST_CASE("runs are deterministic")
{
  const ScenarioConfig c = load_config(config_path("cut_in_case2"));
  std::ostringstream a;
  std::ostringstream b;
  write_log_csv(run_scenario(c), a);
  write_log_csv(run_scenario(c), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind(kSimLogHeader, 0) == 0);
  const std::string text = a.str();
  const auto rows = std::count(text.begin(), text.end(), '\n');
  CHECK(rows == static_cast<long>(std::lround(c.duration / c.step_time)) + 2);
}

TEST_CASE("config parsing errors")
{
  CHECK_THROWS_AS(config_from_json("{}"), ConfigError);
  CHECK_THROWS_AS(config_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"kind":"lane_change","host_speed":20,"bogus":1})"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"kind":"drift","host_speed":20})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"kind":"cut_in","host_speed":20,"target_speed":3})"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"kind":"lane_change","host_speed":-1})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"kind":"lane_change","host_speed":20,"Np":3,"Nu":5})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/x.json"), ConfigError);
  const auto c = config_from_json(R"({"kind":"cut_in","host_speed":9,
    "target_initial_gap":12,"target_speed":4,"gate_reference":"centerline"})");
  CHECK(c.kind == ScenarioKind::CutIn);
  CHECK(c.gate_reference == GateReference::Centerline);
  REQUIRE(c.target.has_value());
  CHECK(c.target->initial_gap == 12.0);
}

TEST_CASE("cut-in requires a target")
{
  ScenarioConfig c;
  c.kind = ScenarioKind::CutIn;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("thresholds json round trip")
{
  RiskThresholds t;
  t.ittc_slope = -0.05;
  t.tm_bounds.pr1 = 1.7;
  const RiskThresholds back = thresholds_from_json(thresholds_to_json(t));
  CHECK(back.ittc_slope == t.ittc_slope);
  CHECK(back.tm_bounds.pr1 == 1.7);
  CHECK(back.ittc_intercepts.c50 == t.ittc_intercepts.c50);
  CHECK_THROWS_AS(thresholds_from_json(R"({"bogus":1})"), ConfigError);
  CHECK_THROWS_AS(thresholds_from_json(R"({"tm_bounds":[0.1,0.5,1.4]})"), ConfigError);
}
