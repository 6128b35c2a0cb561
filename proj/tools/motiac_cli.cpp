// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "motiac/baselines.hpp"
#include "motiac/checks.hpp"
#include "motiac/config.hpp"
#include "motiac/harness.hpp"
#include "motiac/io_util.hpp"
#include "motiac/objectives.hpp"
#include "motiac/rtb_env.hpp"

namespace fs = std::filesystem;
using motiac::config::ConfigError;
using motiac::config::ExperimentConfig;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out;
  std::string mode;
  std::string model;
};

void AddCommon(CLI::App* cmd, CommonFlags& f, bool with_model) {
  cmd->add_option("--config", f.config, "config file (key = value)");
  cmd->add_option("--seed", f.seed, "single seed");
  cmd->add_option("--seeds", f.seeds, "comma-separated seed list");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--mode", f.mode, "deterministic | concurrent");
  if (with_model) cmd->add_option("--model", f.model, "motiac | agg_a3c | o1 | o2 | pid | fixed");
}

ExperimentConfig Resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : motiac::config::LoadFile(f.config);
  if (!f.model.empty()) cfg.model = motiac::config::ParseModel(f.model);
  if (f.seed && !f.seeds.empty()) throw ConfigError("use either --seed or --seeds");
  if (f.seed) cfg.seeds = {*f.seed};
  if (!f.seeds.empty()) cfg.seeds = motiac::config::ParseSeedList(f.seeds);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.mode.empty()) {
    try {
      cfg.train.mode = motiac::train::ParseMode(f.mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  cfg.Validate();
  return cfg;
}

int CmdRun(const CommonFlags& f) {
  const auto cfg = Resolve(f);
  const auto results = motiac::harness::Run(cfg);
  for (const auto& r : results) {
    std::cout << motiac::config::ToString(cfg.model) << " seed " << r.seed << ": revenue "
              << motiac::io::FormatDouble(r.final.revenue) << " cost " << motiac::io::FormatDouble(r.final.cost)
              << " roi " << motiac::io::FormatDouble(r.final.roi) << "  -> " << r.report_path.string() << '\n';
  }
  return 0;
}

int CmdCompare(const std::vector<std::string>& dirs, const std::string& out, int window) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const auto rows = motiac::harness::Compare(paths, window);
  std::cout << motiac::harness::RenderComparison(rows);
  if (!out.empty()) {
    fs::create_directories(out);
    motiac::io::WriteFileAtomic(fs::path(out) / "comparison.csv", motiac::harness::ComparisonCsv(rows));
  }
  return 0;
}

int CmdSweep(const CommonFlags& f) {
  const auto cfg = Resolve(f);
  const auto desk = motiac::harness::BuildDesk(cfg);
  using Kind = motiac::priority::PrioritySchedule::Kind;
  const auto sweep = motiac::harness::SweepPriority(cfg, desk, {Kind::kEqual, Kind::kChanging, Kind::kRandom, Kind::kBayesian});
  fs::create_directories(cfg.out_dir);
  motiac::io::WriteFileAtomic(cfg.out_dir / "sweep.csv", motiac::harness::SweepCsv(sweep));
  std::ostringstream summary;
  summary << "schedule,score\n";
  for (const auto& c : sweep.curves) {
    const double score = motiac::harness::RelativeScore(c.finals, sweep.pid_finals);
    summary << motiac::priority::ToString(c.kind) << ',' << motiac::io::FormatDouble(score) << '\n';
    std::cout << motiac::priority::ToString(c.kind) << ": sqrt(relative revenue * relative roi) = " << score << '\n';
  }
  motiac::io::WriteFileAtomic(cfg.out_dir / "sweep_summary.csv", summary.str());
  return 0;
}

int CmdCheck(const std::string& suite) {
  if (!motiac::checks::IsSuite(suite)) throw ConfigError("unknown check suite '" + suite + "'");
  return motiac::checks::Print(std::cout, motiac::checks::RunSuite(suite)) ? 0 : kExitRuntime;
}

int CmdGenCatalog(const CommonFlags& f, const std::string& base_out) {
  auto cfg = Resolve(f);
  const auto catalog = motiac::rtb::GenerateCatalog(cfg.env.n_ads, cfg.env.catalog, cfg.env.catalog_seed);
  std::ostringstream csv;
  motiac::rtb::WriteCatalogCsv(csv, catalog);
  if (f.out.empty()) {
    std::cout << csv.str();
  } else {
    motiac::io::WriteFileAtomic(f.out, csv.str());
  }
  if (!base_out.empty()) {
    const auto base = motiac::baselines::PidConversionsBase(catalog, cfg.env, cfg.base_seeds, cfg.pid);
    std::ostringstream b;
    motiac::objectives::WriteConversionsBaseCsv(b, base);
    motiac::io::WriteFileAtomic(base_out, b.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective actor-critic bidding lab"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "train or evaluate one model over the seed list");
  AddCommon(run, run_flags, true);

  std::vector<std::string> compare_dirs;
  std::string compare_out;
  int compare_window = 10;
  auto* compare = app.add_subcommand("compare", "relative-to-PID table from run directories");
  compare->add_option("dirs", compare_dirs, "run directories")->required();
  compare->add_option("--out", compare_out, "write comparison.csv here");
  compare->add_option("--window", compare_window, "final iterations averaged per seed");

  CommonFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep-priority", "equal / changing / random / bayesian schedules");
  AddCommon(sweep, sweep_flags, false);

  std::string suite = "all";
  auto* check = app.add_subcommand("check", "property checks");
  check->add_option("suite", suite, "rewards | gradients | posterior | partition | pareto | env | all");

  CommonFlags cat_flags;
  std::string base_out;
  auto* gen = app.add_subcommand("gen-catalog", "write the generated catalog as CSV");
  AddCommon(gen, cat_flags, false);
  gen->add_option("--base", base_out, "also write the PID conversions base CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return CmdRun(run_flags);
    if (*compare) {
      if (compare_window < 1) throw ConfigError("--window must be >= 1");
      return CmdCompare(compare_dirs, compare_out, compare_window);
    }
    if (*sweep) return CmdSweep(sweep_flags);
    if (*check) return CmdCheck(suite);
    if (*gen) return CmdGenCatalog(cat_flags, base_out);
  } catch (const ConfigError& e) {
    std::cerr << "motiac: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "motiac: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
