// SPDX-License-Identifier: Apache-2.0
#include "motiac/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "motiac/baselines.hpp"
#include "motiac/io_util.hpp"

namespace motiac::harness {

namespace fs = std::filesystem;

rtb::Environment Desk::MakeEnv() const { return rtb::Environment(catalog, env, 0, base); }

train::EnvFactory Desk::Factory() const {
  return [this] { return MakeEnv(); };
}

Desk BuildDesk(const config::ExperimentConfig& cfg) {
  Desk desk;
  desk.env = cfg.env;
  if (cfg.catalog_path) {
    std::ifstream in(*cfg.catalog_path);
    if (!in) throw config::ConfigError("cannot open catalog " + cfg.catalog_path->string());
    desk.catalog = rtb::ReadCatalogCsv(in);
    desk.env.n_ads = static_cast<int>(desk.catalog.size());
  } else {
    desk.catalog = rtb::GenerateCatalog(cfg.env.n_ads, cfg.env.catalog, cfg.env.catalog_seed);
  }
  if (cfg.base_path) {
    std::ifstream in(*cfg.base_path);
    if (!in) throw config::ConfigError("cannot open conversions base " + cfg.base_path->string());
    desk.base = std::make_shared<objectives::ConversionsBase>(objectives::ReadConversionsBaseCsv(in));
  } else {
    desk.base = std::make_shared<objectives::ConversionsBase>(
        baselines::PidConversionsBase(desk.catalog, desk.env, cfg.base_seeds, cfg.pid));
  }
  return desk;
}

train::TrainConfig ModelTrainConfig(const config::ExperimentConfig& cfg, std::uint64_t seed) {
  auto t = cfg.train;
  t.seed = seed;
  switch (cfg.model) {
    case config::Model::kMotiac:
      t.groups = {{1.0, 0.0}, {0.0, 1.0}};
      break;
    case config::Model::kAggA3c:
      t.groups = {cfg.combo};
      break;
    case config::Model::kO1:
      t.groups = {{1.0, 0.0}};
      break;
    case config::Model::kO2:
      t.groups = {{0.0, 1.0}};
      break;
    case config::Model::kPid:
    case config::Model::kFixed:
      t.groups = {{1.0, 0.0}};
      break;
  }
  return t;
}

train::TrainReport RunModel(const config::ExperimentConfig& cfg, const Desk& desk, std::uint64_t seed) {
  const auto factory = desk.Factory();
  const auto t = ModelTrainConfig(cfg, seed);
  switch (cfg.model) {
    case config::Model::kMotiac:
      return train::Train(t, factory, "motiac");
    case config::Model::kAggA3c:
      return baselines::AggA3cTrain(t, cfg.combo, factory);
    case config::Model::kO1:
      return baselines::O1Train(t, factory);
    case config::Model::kO2:
      return baselines::O2Train(t, factory);
    case config::Model::kPid:
      return baselines::EvaluatePid(factory, seed, cfg.train.iterations, cfg.pid);
    case config::Model::kFixed:
      return baselines::EvaluateFixed(factory, seed, cfg.train.iterations, cfg.fixed_multiplier);
  }
  throw std::logic_error("unreachable model");
}

std::vector<SeedResult> Run(const config::ExperimentConfig& cfg) {
  cfg.Validate();
  return Run(cfg, BuildDesk(cfg));
}

std::vector<SeedResult> Run(const config::ExperimentConfig& cfg, const Desk& desk) {
  cfg.Validate();
  const fs::path dir = cfg.out_dir / std::string(config::ToString(cfg.model));
  fs::create_directories(dir);
  const auto config_hash = io::Fnv1a(config::Dump(cfg));

  std::vector<SeedResult> results;
  std::ostringstream summary;
  summary << "seed,revenue,cost,roi\n";
  for (auto seed : cfg.seeds) {
    const auto report = RunModel(cfg, desk, seed);
    const std::string stem = "seed_" + std::to_string(seed);
    SeedResult r;
    r.seed = seed;
    r.final = train::Final(report, cfg.final_window);
    r.report_path = dir / (stem + ".csv");
    io::WriteFileAtomic(r.report_path, report::ReportCsv(report));
    if (report.actor) {
      std::ostringstream p;
      nn::WriteParams(p, *report.actor);
      io::WriteFileAtomic(dir / (stem + ".actor.params"), p.str());
      for (std::size_t k = 0; k < report.critics.size(); ++k) {
        std::ostringstream c;
        nn::WriteParams(c, report.critics[k]);
        io::WriteFileAtomic(dir / (stem + ".critic" + std::to_string(k + 1) + ".params"), c.str());
      }
    }
    std::ostringstream manifest;
    manifest << "model=" << config::ToString(cfg.model) << " seed=" << seed << " config_hash=" << std::hex
             << std::setw(16) << std::setfill('0') << config_hash << '\n';
    io::WriteFileAtomic(dir / (stem + ".manifest"), manifest.str());
    summary << seed << ',' << io::FormatDouble(r.final.revenue) << ',' << io::FormatDouble(r.final.cost)
            << ',' << io::FormatDouble(r.final.roi) << '\n';
    results.push_back(std::move(r));
  }
  io::WriteFileAtomic(dir / "summary.csv", summary.str());
  io::WriteFileAtomic(dir / "config.txt", config::Dump(cfg));
  return results;
}

double Median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("Median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string FormatChange(double relative) {
  const double pct = (relative - 1.0) * 100.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.2f%%", std::abs(pct) < 0.005 ? 0.0 : pct);
  return buf;
}

namespace {

std::vector<ComparisonRow> Rows(const std::map<std::string, std::map<std::uint64_t, train::FinalMetrics>>& finals) {
  auto pid = finals.find("pid");
  if (pid == finals.end() || pid->second.empty()) throw std::runtime_error("compare: no PID run found");
  auto medians = [](const std::map<std::uint64_t, train::FinalMetrics>& per_seed) {
    std::vector<double> rev;
    std::vector<double> roi;
    for (const auto& [seed, f] : per_seed) {
      rev.push_back(f.revenue);
      roi.push_back(f.roi);
    }
    return std::pair{Median(rev), Median(roi)};
  };
  const auto [pid_rev, pid_roi] = medians(pid->second);
  std::vector<ComparisonRow> rows;
  auto add = [&](const std::string& model, const std::map<std::uint64_t, train::FinalMetrics>& per_seed) {
    ComparisonRow r;
    r.model = model;
    r.seeds = per_seed.size();
    std::tie(r.revenue, r.roi) = medians(per_seed);
    r.relative_revenue = model == "pid" ? 1.0 : r.revenue / pid_rev;
    r.relative_roi = model == "pid" ? 1.0 : r.roi / pid_roi;
    rows.push_back(r);
  };
  add("pid", pid->second);
  for (const auto& [model, per_seed] : finals) {
    if (model != "pid") add(model, per_seed);
  }
  return rows;
}

}  // namespace

std::vector<ComparisonRow> Compare(const std::vector<fs::path>& run_dirs, int final_window) {
  std::map<std::string, std::map<std::uint64_t, train::FinalMetrics>> finals;
  for (const auto& dir : run_dirs) {
    if (!fs::is_directory(dir)) throw std::runtime_error("compare: not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.starts_with("seed_") && entry.path().extension() == ".csv") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const auto stem = file.stem().string();
      const auto seed = static_cast<std::uint64_t>(io::ParseInt(std::string_view(stem).substr(5)));
      std::ifstream in(file);
      const auto report = report::ReadReportCsv(in);
      if (report.rows.empty()) continue;
      finals[report.model].try_emplace(seed, train::Final(report, final_window));
    }
  }
  if (finals.empty()) throw std::runtime_error("compare: no reports found");
  return Rows(finals);
}

std::vector<ComparisonRow> CompareReports(const std::vector<train::TrainReport>& reports,
                                          const std::vector<std::uint64_t>& seeds, int final_window) {
  if (reports.size() != seeds.size()) throw std::invalid_argument("CompareReports: one seed per report");
  std::map<std::string, std::map<std::uint64_t, train::FinalMetrics>> finals;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    finals[reports[i].model].try_emplace(seeds[i], train::Final(reports[i], final_window));
  }
  if (finals.empty()) throw std::runtime_error("compare: no reports");
  return Rows(finals);
}

std::string RenderComparison(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %5s  %-22s %-22s\n", "model", "seeds", "relative revenue",
                "relative roi");
  out << line;
  for (const auto& r : rows) {
    const std::string rev = [&] {
      char b[64];
      std::snprintf(b, sizeof b, "%.4f (%s)", r.relative_revenue, FormatChange(r.relative_revenue).c_str());
      return std::string(b);
    }();
    const std::string roi = [&] {
      char b[64];
      std::snprintf(b, sizeof b, "%.4f (%s)", r.relative_roi, FormatChange(r.relative_roi).c_str());
      return std::string(b);
    }();
    std::snprintf(line, sizeof line, "%-10s %5zu  %-22s %-22s\n", r.model.c_str(), r.seeds, rev.c_str(),
                  roi.c_str());
    out << line;
  }
  return out.str();
}

std::string ComparisonCsv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "model,seeds,revenue,roi,relative_revenue,relative_roi\n";
  for (const auto& r : rows) {
    out << r.model << ',' << r.seeds << ',' << io::FormatDouble(r.revenue) << ',' << io::FormatDouble(r.roi)
        << ',' << io::FormatDouble(r.relative_revenue) << ',' << io::FormatDouble(r.relative_roi) << '\n';
  }
  return out.str();
}

SweepResult SweepPriority(const config::ExperimentConfig& base, const Desk& desk,
                          const std::vector<priority::PrioritySchedule::Kind>& kinds) {
  base.Validate();
  SweepResult sweep;
  auto pid_cfg = base;
  pid_cfg.model = config::Model::kPid;
  for (auto seed : base.seeds) {
    sweep.pid_finals.push_back(train::Final(RunModel(pid_cfg, desk, seed), base.final_window));
  }
  for (auto kind : kinds) {
    auto cfg = base;
    cfg.model = config::Model::kMotiac;
    cfg.train.schedule.kind = kind;
    SweepCurve curve{kind, {}, {}};
    std::vector<std::vector<report::CurvePoint>> per_seed;
    for (auto seed : cfg.seeds) {
      const auto rep = RunModel(cfg, desk, seed);
      curve.finals.push_back(train::Final(rep, cfg.final_window));
      per_seed.push_back(report::Curve(rep));
    }
    const std::size_t n_points = per_seed.front().size();
    for (std::size_t i = 0; i < n_points; ++i) {
      report::CurvePoint p;
      p.iteration = per_seed.front()[i].iteration;
      p.roi = 0.0;
      p.weights.assign(per_seed.front()[i].weights.size(), 0.0);
      for (const auto& s : per_seed) {
        p.revenue += s[i].revenue;
        p.cost += s[i].cost;
        p.roi += s[i].roi;
        for (std::size_t k = 0; k < p.weights.size(); ++k) p.weights[k] += s[i].weights[k];
      }
      const auto n = static_cast<double>(per_seed.size());
      p.revenue /= n;
      p.cost /= n;
      p.roi /= n;
      for (auto& w : p.weights) w /= n;
      curve.points.push_back(std::move(p));
    }
    sweep.curves.push_back(std::move(curve));
  }
  return sweep;
}

std::string SweepCsv(const SweepResult& sweep) {
  std::ostringstream out;
  const std::size_t k = sweep.curves.empty() || sweep.curves.front().points.empty()
                            ? 0
                            : sweep.curves.front().points.front().weights.size();
  out << "schedule,iteration,revenue,cost,roi";
  for (std::size_t j = 1; j <= k; ++j) out << ",w" << j;
  out << '\n';
  for (const auto& c : sweep.curves) {
    for (const auto& p : c.points) {
      out << priority::ToString(c.kind) << ',' << p.iteration << ',' << io::FormatDouble(p.revenue) << ','
          << io::FormatDouble(p.cost) << ',' << io::FormatDouble(p.roi);
      for (double w : p.weights) out << ',' << io::FormatDouble(w);
      out << '\n';
    }
  }
  return out.str();
}

double RelativeScore(const std::vector<train::FinalMetrics>& finals,
                     const std::vector<train::FinalMetrics>& pid_finals) {
  auto med = [](const std::vector<train::FinalMetrics>& fs, auto field) {
    std::vector<double> v;
    for (const auto& f : fs) v.push_back(f.*field);
    return Median(v);
  };
  const double rel_rev = med(finals, &train::FinalMetrics::revenue) / med(pid_finals, &train::FinalMetrics::revenue);
  const double rel_roi = med(finals, &train::FinalMetrics::roi) / med(pid_finals, &train::FinalMetrics::roi);
  return std::sqrt(rel_rev * rel_roi);
}

}  // namespace motiac::harness
