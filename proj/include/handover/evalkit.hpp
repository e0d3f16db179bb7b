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

#ifndef HANDOVER__EVALKIT_HPP_
#define HANDOVER__EVALKIT_HPP_

#include "handover/risk.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace handover::eval
{

class EvalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class CaseLabel : std::uint8_t { Dangerous, Normal };

struct LabeledCase
{
  std::string id;
  std::vector<double> time;
  std::vector<KinematicPair> series;
  CaseLabel label{CaseLabel::Normal};
  std::optional<std::size_t> brake_onset{};  // sample index
};

/// Throws EvalError on an empty series, mismatched lengths or an onset
/// outside the series.
void validate(const LabeledCase & c);

enum class DetectorKind : std::uint8_t { Ttc, Tm, Combined };

struct Detector
{
  DetectorKind kind{DetectorKind::Tm};
  double tau{0.0};
  RiskThresholds thresholds{};
  RiskLevel min_level{RiskLevel::RL2};
};

Detector ttc_thresh(double tau);
Detector tm_thresh(double tau);
Detector combined(const RiskThresholds & thr, RiskLevel min_level);

/// Any-sample trigger: TTC <= tau, TM <= tau, or combined level >= min_level.
bool detect(const LabeledCase & c, const Detector & detector);

struct ConfusionMatrix
{
  std::int64_t tp{0};
  std::int64_t fp{0};
  std::int64_t fn{0};
  std::int64_t tn{0};

  std::int64_t total() const { return tp + fp + fn + tn; }
};

// Rates with an empty denominator are NaN.
struct ConfusionIndices
{
  double tp_rate{0.0};
  double fp_rate{0.0};
  double fn_rate{0.0};
  double tn_rate{0.0};
  double accuracy{0.0};
  double precision{0.0};
};

ConfusionMatrix confusion(std::span<const bool> detections, std::span<const CaseLabel> labels);
ConfusionIndices indices(const ConfusionMatrix & cm);

struct RocPoint
{
  double fp_rate{0.0};
  double tp_rate{0.0};
  double threshold{0.0};
  ConfusionMatrix counts{};
};

struct RocCurve
{
  std::vector<RocPoint> points;
};

/// For the combined family the threshold is a margin shift s: TM bounds move
/// to pr_i + s and the 1/TTC boundaries to their values minus s, so larger s
/// flags more cases, and +/-inf flag all or none.
struct SweepSpec
{
  DetectorKind family{DetectorKind::Tm};
  std::vector<double> grid;
  RiskThresholds thresholds{};
  RiskLevel min_level{RiskLevel::RL2};
};

/// One point per grid value, in grid order. Throws EvalError on an empty grid
/// or when either label is missing.
RocCurve roc_sweep(std::span<const LabeledCase> cases, const SweepSpec & spec);

/// Default grid for a family, sorted ascending with -inf and +inf ends.
std::vector<double> default_grid(DetectorKind family);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (rank 1
/// for p = 0). Throws EvalError for empty input or p outside [0, 100].
double percentile(std::vector<double> values, double p);

struct FitReport
{
  RiskThresholds thresholds{};
  double intercept{0.0};  // OLS intercept of 1/TTC on host speed
  std::size_t cases_used{0};
};

inline constexpr std::size_t kMinFitCases = 20;

/// Regress 1/TTC at brake onset on host speed, then take the 5th/50th/95th
/// percentiles of the detrended values as intercepts. TM bounds are the
/// 95th/50th/5th percentiles of TM at onset (pr1 > pr2 > pr3). Floors are
/// carried over from `base`. Throws EvalError with fewer than kMinFitCases
/// dangerous cases with an onset, or a degenerate speed spread.
FitReport fit_thresholds(std::span<const LabeledCase> cases, const RiskThresholds & base = {});

// ---- synthetic cases --------------------------------------------------------

struct GeneratorSpec
{
  std::size_t dangerous{100};
  std::size_t normal{100};
  // Standard deviation of additive noise on 1/TTC at onset; 0 keeps the
  // balanced design exact.
  double noise_sigma{0.0};
  std::uint64_t seed{0};
  double slope{-0.0717};
  double sample_time{0.1};
  // Constant TM at every onset instead of the spread design. 1/TTC is
  // lowered where the ladder value cannot reach this TM.
  std::optional<double> constant_tm{};
};

/// Dangerous cases follow 1/TTC = slope * v + r with r on a fixed 25-level
/// ladder whose 5th/50th/95th nearest-rank percentiles are 0.49/1.18/1.73
/// (over any multiple of 100 cases) and host speeds cycling through 2-5 m/s,
/// so the speed and offset columns are orthogonal. Normal cases keep TM above
/// 2.5 s throughout.
std::vector<LabeledCase> generate_cases(const GeneratorSpec & spec);

// ---- file formats ---------------------------------------------------------

/// Reads `dir/manifest.csv` (case_file,label,brake_onset) and the per-case
/// CSVs (time,gap,host_speed,target_speed) it lists.
std::vector<LabeledCase> read_case_set(const std::string & dir);
void write_case_set(const std::string & dir, std::span<const LabeledCase> cases);

void write_roc_csv(const RocCurve & roc, std::ostream & out);
void write_index_report(const RocCurve & roc, DetectorKind family, std::ostream & out);

std::string to_string(DetectorKind kind);
DetectorKind detector_from_string(const std::string & name);

}  // namespace handover::eval

#endif  // HANDOVER__EVALKIT_HPP_
