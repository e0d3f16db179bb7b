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

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace handover
{

using nlohmann::json;

namespace
{

json parse(const std::string & text)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error & e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

void reject_unknown(const json & obj, const std::set<std::string> & known, const std::string & where)
{
  for (const auto & item : obj.items()) {
    if (!known.contains(item.key())) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

double number(const json & obj, const std::string & key, double fallback)
{
  if (!obj.contains(key) || obj.at(key).is_null()) {
    return fallback;
  }
  const json & v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError("'" + key + "' must be a number");
  }
  return v.get<double>();
}

int integer(const json & obj, const std::string & key, int fallback)
{
  if (!obj.contains(key)) {
    return fallback;
  }
  const json & v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError("'" + key + "' must be an integer");
  }
  return v.get<int>();
}

std::array<double, 3> triple(const json & obj, const std::string & key, std::array<double, 3> fallback)
{
  if (!obj.contains(key)) {
    return fallback;
  }
  const json & v = obj.at(key);
  if (!v.is_array() || v.size() != 3) {
    throw ConfigError("'" + key + "' must be an array of three numbers");
  }
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) {
      throw ConfigError("'" + key + "' must be an array of three numbers");
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

const json & object(const json & obj, const std::string & key)
{
  static const json empty = json::object();
  if (!obj.contains(key)) {
    return empty;
  }
  if (!obj.at(key).is_object()) {
    throw ConfigError("'" + key + "' must be an object");
  }
  return obj.at(key);
}

RiskThresholds thresholds_from(const json & j)
{
  if (!j.is_object()) {
    throw ConfigError("thresholds must be a JSON object");
  }
  reject_unknown(j, {"ittc_slope", "ittc_intercepts", "ittc_floors", "tm_bounds"}, "thresholds");
  RiskThresholds thr;
  thr.ittc_slope = number(j, "ittc_slope", thr.ittc_slope);
  const auto c = triple(j, "ittc_intercepts",
                        {thr.ittc_intercepts.c5, thr.ittc_intercepts.c50, thr.ittc_intercepts.c95});
  thr.ittc_intercepts = {c[0], c[1], c[2]};
  const auto f = triple(j, "ittc_floors",
                        {thr.ittc_floors.thr1, thr.ittc_floors.thr2, thr.ittc_floors.thr3});
  thr.ittc_floors = {f[0], f[1], f[2]};
  const auto b = triple(j, "tm_bounds", {thr.tm_bounds.pr1, thr.tm_bounds.pr2, thr.tm_bounds.pr3});
  thr.tm_bounds = {b[0], b[1], b[2]};
  try {
    validate(thr);
  } catch (const std::exception & e) {
    throw ConfigError(e.what());
  }
  return thr;
}

}  // namespace

RiskThresholds thresholds_from_json(const std::string & text)
{
  return thresholds_from(parse(text));
}

std::string thresholds_to_json(const RiskThresholds & thr)
{
  json j;
  j["ittc_slope"] = thr.ittc_slope;
  j["ittc_intercepts"] = {thr.ittc_intercepts.c5, thr.ittc_intercepts.c50, thr.ittc_intercepts.c95};
  j["ittc_floors"] = {thr.ittc_floors.thr1, thr.ittc_floors.thr2, thr.ittc_floors.thr3};
  j["tm_bounds"] = {thr.tm_bounds.pr1, thr.tm_bounds.pr2, thr.tm_bounds.pr3};
  return j.dump(2) + "\n";
}

ScenarioConfig config_from_json(const std::string & text)
{
  const json j = parse(text);
  if (!j.is_object()) {
    throw ConfigError("scenario config must be a JSON object");
  }
  reject_unknown(
    j,
    {"kind", "name", "host_speed", "target_initial_gap", "target_speed", "lane_width",
     "maneuver_length", "maneuver_start", "line_crossing_time", "cut_in", "gate_reference", "vehicle_length",
     "vehicle_width", "vehicle", "limits", "lambda1", "lambda2", "lambda_mode", "r1", "r2", "A",
     "Np", "Nu", "step_time", "duration", "thresholds", "host_decel", "target_decel", "policy",
     "takeover_intent"},
    "config");

  ScenarioConfig c;
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError("config: 'kind' is required (lane_change or cut_in)");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "lane_change") {
    c.kind = ScenarioKind::LaneChange;
  } else if (kind == "cut_in") {
    c.kind = ScenarioKind::CutIn;
  } else {
    throw ConfigError("config: unknown kind '" + kind + "'");
  }
  if (j.contains("name")) {
    if (!j.at("name").is_string()) {
      throw ConfigError("'name' must be a string");
    }
    c.name = j.at("name").get<std::string>();
  }
  if (!j.contains("host_speed")) {
    throw ConfigError("config: 'host_speed' is required");
  }
  c.host_speed = number(j, "host_speed", 0.0);

  const bool has_gap = j.contains("target_initial_gap") && !j.at("target_initial_gap").is_null();
  const bool has_speed = j.contains("target_speed") && !j.at("target_speed").is_null();
  if (has_gap != has_speed) {
    throw ConfigError("config: target_initial_gap and target_speed go together");
  }
  if (has_gap) {
    c.target = TargetVehicle{number(j, "target_initial_gap", 0.0), number(j, "target_speed", 0.0)};
  }

  c.lane_width = number(j, "lane_width", c.lane_width);
  c.maneuver_length = number(j, "maneuver_length", c.maneuver_length);
  c.maneuver_start = number(j, "maneuver_start", c.maneuver_start);
  c.line_crossing_time = number(j, "line_crossing_time", c.line_crossing_time);
  const json & ci = object(j, "cut_in");
  reject_unknown(ci, {"initial_lateral_offset", "lateral_speed"}, "cut_in");
  c.cut_in.initial_lateral_offset =
    number(ci, "initial_lateral_offset", c.cut_in.initial_lateral_offset);
  c.cut_in.lateral_speed = number(ci, "lateral_speed", c.cut_in.lateral_speed);
  if (j.contains("gate_reference")) {
    const std::string ref = j.at("gate_reference").is_string() ? j.at("gate_reference").get<std::string>() : "";
    if (ref == "near_edge") {
      c.gate_reference = GateReference::NearEdge;
    } else if (ref == "centerline") {
      c.gate_reference = GateReference::Centerline;
    } else {
      throw ConfigError("config: gate_reference must be near_edge or centerline");
    }
  }
  c.vehicle_length = number(j, "vehicle_length", c.vehicle_length);
  c.vehicle_width = number(j, "vehicle_width", c.vehicle_width);

  const json & v = object(j, "vehicle");
  reject_unknown(v, {"a", "b", "m", "Iz", "Cf", "Cr"}, "vehicle");
  c.vehicle.a = number(v, "a", c.vehicle.a);
  c.vehicle.b = number(v, "b", c.vehicle.b);
  c.vehicle.m = number(v, "m", c.vehicle.m);
  c.vehicle.Iz = number(v, "Iz", c.vehicle.Iz);
  c.vehicle.Cf = number(v, "Cf", c.vehicle.Cf);
  c.vehicle.Cr = number(v, "Cr", c.vehicle.Cr);

  const json & lim = object(j, "limits");
  reject_unknown(lim, {"max_steer", "min_accel", "max_accel"}, "limits");
  c.limits.max_steer = number(lim, "max_steer", c.limits.max_steer);
  c.limits.min_accel = number(lim, "min_accel", c.limits.min_accel);
  c.limits.max_accel = number(lim, "max_accel", c.limits.max_accel);

  c.controller.lambda1 = number(j, "lambda1", c.controller.lambda1);
  c.controller.lambda2 = number(j, "lambda2", c.controller.lambda2);
  c.controller.r1 = number(j, "r1", c.controller.r1);
  c.controller.r2 = number(j, "r2", c.controller.r2);
  c.controller.total_privilege = number(j, "A", c.controller.total_privilege);
  c.controller.Np = integer(j, "Np", c.controller.Np);
  c.controller.Nu = integer(j, "Nu", c.controller.Nu);
  if (j.contains("lambda_mode")) {
    const std::string mode = j.at("lambda_mode").is_string() ? j.at("lambda_mode").get<std::string>() : "";
    if (mode == "constant") {
      c.controller.lambda_mode = LambdaMode::Constant;
    } else if (mode == "privilege_scaled") {
      c.controller.lambda_mode = LambdaMode::PrivilegeScaled;
    } else {
      throw ConfigError("config: lambda_mode must be constant or privilege_scaled");
    }
  }
  c.step_time = number(j, "step_time", c.step_time);
  c.duration = number(j, "duration", c.duration);

  if (j.contains("thresholds")) {
    c.thresholds = thresholds_from(j.at("thresholds"));
  }
  c.host_decel = number(j, "host_decel", c.host_decel);
  c.target_decel = number(j, "target_decel", c.target_decel);

  const json & pol = object(j, "policy");
  reject_unknown(
    pol, {"take_rl1", "take_rl2", "take_rl3", "return_intent", "return_no_intent"}, "policy");
  c.policy.take_rl1 = number(pol, "take_rl1", c.policy.take_rl1);
  c.policy.take_rl2 = number(pol, "take_rl2", c.policy.take_rl2);
  c.policy.take_rl3 = number(pol, "take_rl3", c.policy.take_rl3);
  c.policy.return_intent = number(pol, "return_intent", c.policy.return_intent);
  c.policy.return_no_intent = number(pol, "return_no_intent", c.policy.return_no_intent);
  c.policy.step_time = c.step_time;

  if (j.contains("takeover_intent") && !j.at("takeover_intent").is_null()) {
    if (!j.at("takeover_intent").is_boolean()) {
      throw ConfigError("'takeover_intent' must be true, false or null");
    }
    c.takeover_intent = j.at("takeover_intent").get<bool>();
  }

  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

namespace
{

void put(std::ostream & out, double v)
{
  if (std::isinf(v)) {
    out << (v > 0 ? "inf" : "-inf");
  } else if (std::isnan(v)) {
    out << "nan";
  } else {
    out << v;
  }
}

}  // namespace

void write_log_csv(const SimLog & log, std::ostream & out)
{
  out << kSimLogHeader << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const SimRow & r : log.rows) {
    const double cols[] = {r.time,          r.lateral.d_y,  r.lateral.v_y, r.lateral.psi,
                           r.lateral.omega, r.longitudinal.d_x, r.longitudinal.v_x,
                           r.kappa1,        r.kappa2};
    for (double c : cols) {
      put(out, c);
      out << ',';
    }
    out << to_int(r.rl) << ',' << to_int(r.or_lvl) << ',' << to_int(r.pr_lvl) << ',';
    const double tail[] = {r.ttc, r.tm, r.u_d, r.u_a, r.t1_0, r.t2_0};
    for (std::size_t i = 0; i < std::size(tail); ++i) {
      put(out, tail[i]);
      out << (i + 1 < std::size(tail) ? ',' : '\n');
    }
  }
}

void write_summary(const RunSummary & s, std::ostream & out)
{
  out << std::fixed << std::setprecision(4);
  out << "scenario: " << (s.name.empty() ? "(unnamed)" : s.name) << '\n';
  out << "duration_s: " << s.duration << '\n';
  if (s.first_risk_time) {
    out << "first_risk_s: " << *s.first_risk_time << " (" << to_string(*s.first_risk_level) << ")\n";
  } else {
    out << "first_risk_s: none\n";
  }
  const HandoverEvent * first = nullptr;
  for (const HandoverEvent & e : s.handovers) {
    if (e.kind == ScheduleKind::Takeover) {
      first = &e;
      break;
    }
  }
  if (first) {
    out << "handover_start_s: " << first->time << '\n';
  } else {
    out << "handover_start_s: none\n";
  }
  for (const HandoverEvent & e : s.handovers) {
    out << "handover: " << (e.kind == ScheduleKind::Takeover ? "takeover" : "return")
        << " at " << e.time << " s, " << to_string(e.level) << ", ramp " << e.duration << " s\n";
  }
  if (s.min_gap) {
    out << "min_gap_m: " << *s.min_gap << '\n';
  } else {
    out << "min_gap_m: n/a\n";
  }
  out << "peak_decel_mps2: " << s.peak_decel << '\n';
  out << "max_abs_steer_rad: " << s.max_abs_steer << '\n';
  out << "max_abs_dy_m: " << s.max_abs_dy << '\n';
  out << "final_dy_m: " << s.final_dy << '\n';
  out << "final_speed_mps: " << s.final_speed << '\n';
  if (s.target_speed) {
    out << "target_speed_mps: " << *s.target_speed << '\n';
  }
  out << "collision: " << (s.collision ? "yes" : "no") << '\n';
}

}  // namespace handover
