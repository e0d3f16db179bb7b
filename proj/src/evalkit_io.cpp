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
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace handover::eval
{

namespace fs = std::filesystem;

namespace
{

std::vector<std::string> split(const std::string & line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

std::string trim(std::string s)
{
  const auto ws = [](unsigned char ch) { return std::isspace(ch) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

double to_double(const std::string & cell, const std::string & where)
{
  const std::string s = trim(cell);
  if (s == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw EvalError(where + ": bad number '" + cell + "'");
  }
  return v;
}

std::ifstream open_in(const fs::path & p)
{
  std::ifstream in(p);
  if (!in) {
    throw EvalError("cannot open '" + p.string() + "'");
  }
  return in;
}

LabeledCase read_case(const fs::path & path)
{
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "time,gap,host_speed,target_speed") {
    throw EvalError(path.string() + ": expected header time,gap,host_speed,target_speed");
  }
  LabeledCase c;
  c.id = path.stem().string();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split(line);
    const std::string where = path.string() + ":" + std::to_string(row);
    if (cells.size() != 4) {
      throw EvalError(where + ": expected 4 columns");
    }
    c.time.push_back(to_double(cells[0], where));
    KinematicPair p;
    p.gap = to_double(cells[1], where);
    p.host_speed = to_double(cells[2], where);
    p.target_speed = to_double(cells[3], where);
    c.series.push_back(p);
  }
  return c;
}

}  // namespace

std::vector<LabeledCase> read_case_set(const std::string & dir)
{
  const fs::path root(dir);
  const fs::path manifest = root / "manifest.csv";
  if (!fs::exists(manifest)) {
    throw EvalError("missing manifest '" + manifest.string() + "'");
  }
  std::ifstream in = open_in(manifest);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "case_file,label,brake_onset") {
    throw EvalError(manifest.string() + ": expected header case_file,label,brake_onset");
  }
  std::vector<LabeledCase> cases;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split(line);
    const std::string where = manifest.string() + ":" + std::to_string(row);
    if (cells.size() != 3) {
      throw EvalError(where + ": expected 3 columns");
    }
    LabeledCase c = read_case(root / trim(cells[0]));
    const std::string label = trim(cells[1]);
    if (label == "dangerous") {
      c.label = CaseLabel::Dangerous;
    } else if (label == "normal") {
      c.label = CaseLabel::Normal;
    } else {
      throw EvalError(where + ": label must be dangerous or normal");
    }
    const std::string onset = trim(cells[2]);
    if (!onset.empty()) {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(onset.data(), onset.data() + onset.size(), idx);
      if (ec != std::errc() || ptr != onset.data() + onset.size()) {
        throw EvalError(where + ": brake_onset must be a sample index");
      }
      c.brake_onset = idx;
    }
    validate(c);
    cases.push_back(std::move(c));
  }
  return cases;
}

void write_case_set(const std::string & dir, std::span<const LabeledCase> cases)
{
  const fs::path root(dir);
  fs::create_directories(root);
  std::ofstream manifest(root / "manifest.csv");
  if (!manifest) {
    throw EvalError("cannot write manifest in '" + dir + "'");
  }
  manifest << "case_file,label,brake_onset\n";
  for (const LabeledCase & c : cases) {
    const std::string file = c.id + ".csv";
    manifest << file << ',' << (c.label == CaseLabel::Dangerous ? "dangerous" : "normal") << ',';
    if (c.brake_onset) {
      manifest << *c.brake_onset;
    }
    manifest << '\n';
    std::ofstream out(root / file);
    out << "time,gap,host_speed,target_speed\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < c.series.size(); ++i) {
      const KinematicPair & p = c.series[i];
      out << c.time[i] << ',' << p.gap << ',' << p.host_speed << ',' << p.target_speed << '\n';
    }
  }
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

void write_roc_csv(const RocCurve & roc, std::ostream & out)
{
  out << "threshold,fp_rate,tp_rate\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const RocPoint & p : roc.points) {
    put(out, p.threshold);
    out << ',';
    put(out, p.fp_rate);
    out << ',';
    put(out, p.tp_rate);
    out << '\n';
  }
}

void write_index_report(const RocCurve & roc, DetectorKind family, std::ostream & out)
{
  out << "detector: " << to_string(family) << '\n';
  out << "threshold tp fp fn tn tp_rate fp_rate fn_rate tn_rate accuracy precision\n";
  out << std::fixed << std::setprecision(6);
  const RocPoint * best = nullptr;
  double best_acc = -1.0;
  for (const RocPoint & p : roc.points) {
    const ConfusionIndices ix = indices(p.counts);
    put(out, p.threshold);
    out << ' ' << p.counts.tp << ' ' << p.counts.fp << ' ' << p.counts.fn << ' ' << p.counts.tn;
    for (double v : {ix.tp_rate, ix.fp_rate, ix.fn_rate, ix.tn_rate, ix.accuracy, ix.precision}) {
      out << ' ';
      put(out, v);
    }
    out << '\n';
    if (ix.accuracy > best_acc) {
      best_acc = ix.accuracy;
      best = &p;
    }
  }
  if (best) {
    out << "best_accuracy: " << best_acc << " at threshold ";
    put(out, best->threshold);
    out << '\n';
  }
}

}  // namespace handover::eval
