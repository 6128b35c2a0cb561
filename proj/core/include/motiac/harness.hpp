// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner: builds the desk market from a config, runs a model
// over a list of seeds, writes reports and checkpoints, and compares runs
// against the PID reference.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "motiac/config.hpp"
#include "motiac/objectives.hpp"
#include "motiac/report.hpp"
#include "motiac/trainer.hpp"

namespace motiac::harness {

/// Catalog, conversions base and an environment factory bound to both.
struct Desk {
  std::vector<rtb::AdCampaign> catalog;
  std::shared_ptr<const objectives::ConversionsBase> base;
  rtb::EnvConfig env;

  rtb::Environment MakeEnv() const;
  train::EnvFactory Factory() const;
};

/// Loads or generates the catalog; loads the base from env.base_path or
/// builds it from the PID reference over env.base_seeds.
Desk BuildDesk(const config::ExperimentConfig& cfg);

/// Training config for the selected model (reward groups filled in).
train::TrainConfig ModelTrainConfig(const config::ExperimentConfig& cfg, std::uint64_t seed);

/// One report for one seed. PID and fixed emit train.iterations evaluation
/// episodes; the learners train for train.iterations iterations.
train::TrainReport RunModel(const config::ExperimentConfig& cfg, const Desk& desk, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  train::FinalMetrics final;
  std::filesystem::path report_path;
};

/// Runs every seed and writes, under <out>/<model>/:
///   seed_<n>.csv, seed_<n>.actor.params, seed_<n>.critic<k>.params,
///   seed_<n>.manifest and summary.csv.
std::vector<SeedResult> Run(const config::ExperimentConfig& cfg);
std::vector<SeedResult> Run(const config::ExperimentConfig& cfg, const Desk& desk);

struct ComparisonRow {
  std::string model;
  std::size_t seeds = 0;
  double revenue = 0.0;  // median over seeds of the final-window metrics
  double roi = 1.0;
  double relative_revenue = 1.0;
  double relative_roi = 1.0;
};

double Median(std::vector<double> values);

/// "+4.21%" for 1.0421, "-0.50%" for 0.995.
std::string FormatChange(double relative);

/// Scans each directory (recursively) for seed_<n>.csv reports. Duplicate
/// (model, seed) reports are counted once. Throws when nothing is found or
/// no PID report is present. PID comes first, then models by name.
std::vector<ComparisonRow> Compare(const std::vector<std::filesystem::path>& run_dirs, int final_window);

/// Same comparison from in-memory reports.
std::vector<ComparisonRow> CompareReports(const std::vector<train::TrainReport>& reports,
                                          const std::vector<std::uint64_t>& seeds, int final_window);

std::string RenderComparison(const std::vector<ComparisonRow>& rows);
std::string ComparisonCsv(const std::vector<ComparisonRow>& rows);

struct SweepCurve {
  priority::PrioritySchedule::Kind kind;
  std::vector<report::CurvePoint> points;          // mean over seeds per iteration
  std::vector<train::FinalMetrics> finals;          // one per seed
};

struct SweepResult {
  std::vector<SweepCurve> curves;
  std::vector<train::FinalMetrics> pid_finals;      // one per seed
};

/// Trains the multi-objective model once per schedule and seed (shared
/// seeds), plus the PID reference per seed.
SweepResult SweepPriority(const config::ExperimentConfig& base, const Desk& desk,
                          const std::vector<priority::PrioritySchedule::Kind>& kinds);

/// schedule,iteration,revenue,cost,roi,w1..wK
std::string SweepCsv(const SweepResult& sweep);

/// sqrt(relative revenue * relative ROI) of the seed medians against PID.
double RelativeScore(const std::vector<train::FinalMetrics>& finals,
                     const std::vector<train::FinalMetrics>& pid_finals);

}  // namespace motiac::harness
