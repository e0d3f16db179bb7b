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

#include "cli.hpp"

#include "handover/evalkit.hpp"
#include "handover/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace handover::cli
{

namespace fs = std::filesystem;

namespace
{

struct Options
{
  std::vector<std::string> configs;
  std::string cases;
  std::string out;
  std::string thresholds;
  std::string detector{"tm"};
  int level{2};
  std::uint64_t seed{0};
  std::size_t dangerous{100};
  std::size_t normal{100};
  double noise{0.0};
  std::optional<double> constant_tm;
};

std::string read_file(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<RiskThresholds> load_thresholds(const std::string & path)
{
  if (path.empty()) {
    return std::nullopt;
  }
  return thresholds_from_json(read_file(path));
}

std::size_t thread_cap(std::size_t jobs)
{
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char * env = std::getenv("HANDOVER_SIM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) {
        cap = static_cast<std::size_t>(v);
      }
    } catch (const std::exception &) {
      // ignored: fall back to the hardware count
    }
  }
  return std::min(cap, jobs);
}

struct SimResult
{
  std::string stem;
  std::string log_csv;
  std::string summary;
  int status{kExitOk};
  std::string error;
};

SimResult simulate_one(const std::string & path, const std::optional<RiskThresholds> & thr)
{
  SimResult r;
  r.stem = fs::path(path).stem().string();
  try {
    ScenarioConfig config = load_config(path);
    if (thr) {
      config.thresholds = *thr;
      validate(config);
    }
    if (config.name.empty()) {
      config.name = r.stem;
    }
    const SimLog log = run_scenario(config);
    std::ostringstream csv;
    write_log_csv(log, csv);
    r.log_csv = csv.str();
    std::ostringstream sum;
    write_summary(summarize(config, log), sum);
    r.summary = sum.str();
  } catch (const NashNonExistence & e) {
    r.status = kExitNoEquilibrium;
    r.error = path + ": " + e.what();
  } catch (const ConfigError & e) {
    r.status = kExitConfig;
    r.error = path + ": " + e.what();
  } catch (const std::exception & e) {
    r.status = kExitFailure;
    r.error = path + ": " + e.what();
  }
  return r;
}

int cmd_simulate(const Options & o, std::ostream & out, std::ostream & err)
{
  const std::optional<RiskThresholds> thr = load_thresholds(o.thresholds);
  std::vector<SimResult> results(o.configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < o.configs.size(); i = next++) {
      results[i] = simulate_one(o.configs[i], thr);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = thread_cap(o.configs.size());
  for (std::size_t t = 1; t < n; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (std::thread & t : pool) {
    t.join();
  }

  if (!o.out.empty()) {
    fs::create_directories(o.out);
  }
  int status = kExitOk;
  for (const SimResult & r : results) {
    if (r.status != kExitOk) {
      err << "error: " << r.error << '\n';
      status = std::max(status, r.status);
      continue;
    }
    out << r.summary;
    if (!o.out.empty()) {
      std::ofstream(fs::path(o.out) / (r.stem + ".csv")) << r.log_csv;
      std::ofstream(fs::path(o.out) / (r.stem + "_summary.txt")) << r.summary;
    }
  }
  return status;
}

int cmd_evaluate(const Options & o, std::ostream & out)
{
  const eval::DetectorKind family = eval::detector_from_string(o.detector);
  const std::optional<RiskThresholds> thr = load_thresholds(o.thresholds);
  const std::vector<eval::LabeledCase> cases = eval::read_case_set(o.cases);
  eval::SweepSpec spec;
  spec.family = family;
  spec.grid = eval::default_grid(family);
  spec.thresholds = thr.value_or(RiskThresholds{});
  spec.min_level = risk_level_from_int(o.level);
  const eval::RocCurve roc = eval::roc_sweep(cases, spec);

  std::ostringstream report;
  eval::write_index_report(roc, family, report);
  out << report.str();
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream roc_file(fs::path(o.out) / "roc.csv");
    eval::write_roc_csv(roc, roc_file);
    std::ofstream(fs::path(o.out) / "index.txt") << report.str();
  }
  return kExitOk;
}

int cmd_fit(const Options & o, std::ostream & out)
{
  const std::vector<eval::LabeledCase> cases = eval::read_case_set(o.cases);
  const RiskThresholds base = load_thresholds(o.thresholds).value_or(RiskThresholds{});
  const eval::FitReport fit = eval::fit_thresholds(cases, base);
  const std::string json = thresholds_to_json(fit.thresholds);
  if (o.out.empty()) {
    out << json;
  } else {
    const fs::path target = fs::is_directory(o.out) ? fs::path(o.out) / "thresholds.json"
                                                    : fs::path(o.out);
    if (target.has_parent_path()) {
      fs::create_directories(target.parent_path());
    }
    std::ofstream(target) << json;
    out << "fitted " << fit.cases_used << " cases, slope " << fit.thresholds.ittc_slope << " -> "
        << target.string() << '\n';
  }
  return kExitOk;
}

int cmd_gen(const Options & o, std::ostream & out)
{
  eval::GeneratorSpec spec;
  spec.dangerous = o.dangerous;
  spec.normal = o.normal;
  spec.noise_sigma = o.noise;
  spec.seed = o.seed;
  spec.constant_tm = o.constant_tm;
  const std::vector<eval::LabeledCase> cases = eval::generate_cases(spec);
  eval::write_case_set(o.out, cases);
  out << "wrote " << cases.size() << " cases to " << o.out << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Shared-control handover simulator and risk detector toolkit", "handover-sim"};
  app.require_subcommand(1);
  Options o;

  CLI::App * sim = app.add_subcommand("simulate", "Run scenario configs and write CSV logs");
  sim->add_option("--config", o.configs, "Scenario JSON file(s)")->required();
  sim->add_option("--out", o.out, "Output directory for logs and summaries");
  sim->add_option("--thresholds", o.thresholds, "Risk thresholds JSON overriding the config");
  sim->add_option("--seed", o.seed, "Run seed (the simulation itself is deterministic)");

  CLI::App * ev = app.add_subcommand("evaluate", "ROC sweep and confusion indices over a case set");
  ev->add_option("--cases,--config", o.cases, "Case set directory holding manifest.csv")->required();
  ev->add_option("--detector", o.detector, "ttc, tm or combined");
  ev->add_option("--level", o.level, "Minimum risk level for the combined detector")
    ->check(CLI::Range(1, 3));
  ev->add_option("--thresholds", o.thresholds, "Risk thresholds JSON");
  ev->add_option("--out", o.out, "Output directory for roc.csv and index.txt");
  ev->add_option("--seed", o.seed, "Unused; accepted for a uniform interface");

  CLI::App * fit = app.add_subcommand("fit", "Fit risk thresholds to dangerous cases");
  fit->add_option("--cases,--config", o.cases, "Case set directory holding manifest.csv")
    ->required();
  fit->add_option("--thresholds", o.thresholds, "Thresholds JSON supplying the 1/TTC floors");
  fit->add_option("--out", o.out, "Output JSON file (or directory)");
  fit->add_option("--seed", o.seed, "Unused; accepted for a uniform interface");

  CLI::App * gen = app.add_subcommand("gen", "Write a synthetic labelled case set");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--dangerous", o.dangerous, "Number of dangerous cases");
  gen->add_option("--normal", o.normal, "Number of normal cases");
  gen->add_option("--noise", o.noise, "Std dev of noise on 1/TTC at onset")
    ->check(CLI::NonNegativeNumber);
  gen->add_option("--constant-tm", o.constant_tm, "Use one TM value at every onset");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError & e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(o, out, err);
    }
    if (ev->parsed()) {
      return cmd_evaluate(o, out);
    }
    if (fit->parsed()) {
      return cmd_fit(o, out);
    }
    return cmd_gen(o, out);
  } catch (const ConfigError & e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const eval::EvalError & e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace handover::cli
