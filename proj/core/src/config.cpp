// SPDX-License-Identifier: Apache-2.0
#include "motiac/config.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "motiac/io_util.hpp"

namespace motiac::config {

namespace {

struct Field {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

double Real(std::string_view v) { return io::ParseDouble(v); }

int Int(std::string_view v) {
  const auto n = io::ParseInt(v);
  if (n < INT32_MIN || n > INT32_MAX) throw std::out_of_range("integer out of range");
  return static_cast<int>(n);
}

bool Bool(std::string_view v) {
  v = io::Trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true or false");
}

std::vector<double> RealList(std::string_view v) {
  std::vector<double> out;
  for (const auto& part : io::Split(v, ',')) out.push_back(io::ParseDouble(part));
  return out;
}

template <typename T>
std::string JoinList(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += io::FormatDouble(xs[i]);
    } else {
      s += std::to_string(xs[i]);
    }
  }
  return s;
}

std::string Str(double v) { return io::FormatDouble(v); }

#define REAL_FIELD(key, member) \
  {key, {[](ExperimentConfig& c, std::string_view v) { c.member = Real(v); }, \
         [](const ExperimentConfig& c) { return Str(c.member); }}}
#define INT_FIELD(key, member) \
  {key, {[](ExperimentConfig& c, std::string_view v) { c.member = Int(v); }, \
         [](const ExperimentConfig& c) { return std::to_string(c.member); }}}

const std::map<std::string, Field, std::less<>>& Fields() {
  static const std::map<std::string, Field, std::less<>> fields = {
      {"model", {[](ExperimentConfig& c, std::string_view v) { c.model = ParseModel(v); },
                 [](const ExperimentConfig& c) { return std::string(ToString(c.model)); }}},
      {"seeds", {[](ExperimentConfig& c, std::string_view v) { c.seeds = ParseSeedList(v); },
                 [](const ExperimentConfig& c) { return JoinList(c.seeds); }}},
      {"out", {[](ExperimentConfig& c, std::string_view v) { c.out_dir = std::string(io::Trim(v)); },
               [](const ExperimentConfig& c) { return c.out_dir.string(); }}},
      INT_FIELD("report.final_window", final_window),

      INT_FIELD("env.n_ads", env.n_ads),
      {"env.catalog_seed",
       {[](ExperimentConfig& c, std::string_view v) {
          c.env.catalog_seed = static_cast<std::uint64_t>(io::ParseInt(v));
        },
        [](const ExperimentConfig& c) { return std::to_string(c.env.catalog_seed); }}},
      REAL_FIELD("env.noise_sigma", env.noise_sigma),
      REAL_FIELD("env.reserve", env.reserve),
      INT_FIELD("env.market.rivals", env.market.rivals),
      REAL_FIELD("env.market.log_mean", env.market.log_mean),
      REAL_FIELD("env.market.log_sigma", env.market.log_sigma),
      REAL_FIELD("env.catalog.ctr_lo", env.catalog.ctr.lo),
      REAL_FIELD("env.catalog.ctr_hi", env.catalog.ctr.hi),
      REAL_FIELD("env.catalog.cvr_lo", env.catalog.cvr.lo),
      REAL_FIELD("env.catalog.cvr_hi", env.catalog.cvr.hi),
      REAL_FIELD("env.catalog.cpa_lo", env.catalog.cpa_target.lo),
      REAL_FIELD("env.catalog.cpa_hi", env.catalog.cpa_target.hi),
      INT_FIELD("env.catalog.impressions_lo", env.catalog.impressions.lo),
      INT_FIELD("env.catalog.impressions_hi", env.catalog.impressions.hi),
      {"env.catalog.budgeted",
       {[](ExperimentConfig& c, std::string_view v) { c.env.catalog.budgeted = Bool(v); },
        [](const ExperimentConfig& c) { return std::string(c.env.catalog.budgeted ? "true" : "false"); }}},
      REAL_FIELD("env.catalog.budget_lo", env.catalog.budget_multiplier.lo),
      REAL_FIELD("env.catalog.budget_hi", env.catalog.budget_multiplier.hi),
      {"env.catalog_path",
       {[](ExperimentConfig& c, std::string_view v) { c.catalog_path = std::string(io::Trim(v)); },
        [](const ExperimentConfig& c) { return c.catalog_path ? c.catalog_path->string() : std::string(); }}},
      {"env.base_path",
       {[](ExperimentConfig& c, std::string_view v) { c.base_path = std::string(io::Trim(v)); },
        [](const ExperimentConfig& c) { return c.base_path ? c.base_path->string() : std::string(); }}},
      {"env.base_seeds", {[](ExperimentConfig& c, std::string_view v) { c.base_seeds = ParseSeedList(v); },
                          [](const ExperimentConfig& c) { return JoinList(c.base_seeds); }}},

      INT_FIELD("train.iterations", train.iterations),
      INT_FIELD("train.workers", train.workers_per_group),
      INT_FIELD("train.threads", train.threads),
      REAL_FIELD("train.gamma", train.gamma),
      REAL_FIELD("train.actor_lr", train.actor_adam.step_size),
      REAL_FIELD("train.critic_lr", train.critic_adam.step_size),
      {"train.hidden",
       {[](ExperimentConfig& c, std::string_view v) {
          std::vector<std::size_t> h;
          for (const auto& p : io::Split(v, ',')) {
            const auto n = io::ParseInt(p);
            if (n < 1) throw std::invalid_argument("hidden sizes must be >= 1");
            h.push_back(static_cast<std::size_t>(n));
          }
          c.train.hidden = std::move(h);
        },
        [](const ExperimentConfig& c) { return JoinList(c.train.hidden); }}},
      {"train.activation",
       {[](ExperimentConfig& c, std::string_view v) { c.train.activation = nn::ParseActivation(v); },
        [](const ExperimentConfig& c) { return std::string(nn::ToString(c.train.activation)); }}},
      {"train.mode", {[](ExperimentConfig& c, std::string_view v) { c.train.mode = train::ParseMode(v); },
                      [](const ExperimentConfig& c) { return std::string(train::ToString(c.train.mode)); }}},
      REAL_FIELD("loss.eta1", train.loss.actor),
      REAL_FIELD("loss.eta2", train.loss.critic),
      REAL_FIELD("loss.eta3", train.loss.entropy),

      {"schedule.kind",
       {[](ExperimentConfig& c, std::string_view v) { c.train.schedule.kind = priority::ParseScheduleKind(v); },
        [](const ExperimentConfig& c) { return std::string(priority::ToString(c.train.schedule.kind)); }}},
      REAL_FIELD("schedule.alpha", train.schedule.alpha),
      REAL_FIELD("schedule.beta", train.schedule.beta),
      {"schedule.carry_prior",
       {[](ExperimentConfig& c, std::string_view v) { c.train.schedule.carry_prior = Bool(v); },
        [](const ExperimentConfig& c) { return std::string(c.train.schedule.carry_prior ? "true" : "false"); }}},

      {"agg.combo", {[](ExperimentConfig& c, std::string_view v) { c.combo = RealList(v); },
                     [](const ExperimentConfig& c) { return JoinList(c.combo); }}},
      REAL_FIELD("pid.kp", pid.gains.kp),
      REAL_FIELD("pid.ki", pid.gains.ki),
      REAL_FIELD("pid.kd", pid.gains.kd),
      REAL_FIELD("pid.u_lo", pid.u_lo),
      REAL_FIELD("pid.u_hi", pid.u_hi),
      REAL_FIELD("pid.multiplier_lo", pid.multiplier_bounds.lo),
      REAL_FIELD("pid.multiplier_hi", pid.multiplier_bounds.hi),
      REAL_FIELD("fixed.multiplier", fixed_multiplier),
  };
  return fields;
}

#undef REAL_FIELD
#undef INT_FIELD

void CheckRange(const rtb::Range& r, const char* name) {
  if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi)) {
    throw ConfigError(std::string("env.catalog.") + name + ": empty or inverted range");
  }
}

}  // namespace

std::string_view ToString(Model model) {
  switch (model) {
    case Model::kMotiac:
      return "motiac";
    case Model::kAggA3c:
      return "agg_a3c";
    case Model::kO1:
      return "o1";
    case Model::kO2:
      return "o2";
    case Model::kPid:
      return "pid";
    case Model::kFixed:
      return "fixed";
  }
  return "motiac";
}

Model ParseModel(std::string_view name) {
  name = io::Trim(name);
  for (auto m : {Model::kMotiac, Model::kAggA3c, Model::kO1, Model::kO2, Model::kPid, Model::kFixed}) {
    if (name == ToString(m)) return m;
  }
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

void ExperimentConfig::Validate() const {
  if (seeds.empty()) throw ConfigError("seed list must not be empty");
  if (base_seeds.empty()) throw ConfigError("env.base_seeds must not be empty");
  if (final_window < 1) throw ConfigError("report.final_window must be >= 1");
  if (env.n_ads < 1) throw ConfigError("env.n_ads must be >= 1");
  if (env.reserve < 0.0) throw ConfigError("env.reserve must be >= 0");
  if (env.noise_sigma < 0.0) throw ConfigError("env.noise_sigma must be >= 0");
  if (env.market.rivals < 0 || env.market.log_sigma < 0.0) throw ConfigError("bad env.market settings");
  CheckRange(env.catalog.ctr, "ctr");
  CheckRange(env.catalog.cvr, "cvr");
  CheckRange(env.catalog.cpa_target, "cpa");
  CheckRange(env.catalog.budget_multiplier, "budget");
  if (env.catalog.impressions.lo < 0 || env.catalog.impressions.lo > env.catalog.impressions.hi) {
    throw ConfigError("env.catalog.impressions: empty or inverted range");
  }
  if (!(fixed_multiplier > 0.0)) throw ConfigError("fixed.multiplier must be > 0");
  try {
    train.Validate();
    if (model == Model::kAggA3c) baselines::ValidateCombination(combo);
    baselines::PidState{pid.gains, 0.0, 0.0, false, pid.u_lo, pid.u_hi}.Validate();
    if (!(pid.multiplier_bounds.lo > 0.0 && pid.multiplier_bounds.lo < pid.multiplier_bounds.hi)) {
      throw std::invalid_argument("pid multiplier bounds must satisfy 0 < lo < hi");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::map<std::string, std::string> ParseKeyValues(std::string_view text) {
  std::map<std::string, std::string> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = io::Trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = std::string(io::Trim(line.substr(0, eq)));
    const auto value = std::string(io::Trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    if (end == text.size()) break;
  }
  return out;
}

ExperimentConfig Apply(const std::map<std::string, std::string>& values, ExperimentConfig base) {
  const auto& fields = Fields();
  for (const auto& [key, value] : values) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second.set(base, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig LoadFile(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::ReadFile(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return Apply(ParseKeyValues(text));
}

std::vector<std::uint64_t> ParseSeedList(std::string_view text) {
  std::vector<std::uint64_t> out;
  try {
    for (const auto& part : io::Split(text, ',')) {
      if (io::Trim(part).empty()) continue;
      const auto n = io::ParseInt(part);
      if (n < 0) throw std::invalid_argument("seeds must be >= 0");
      out.push_back(static_cast<std::uint64_t>(n));
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad seed list: ") + e.what());
  }
  if (out.empty()) throw ConfigError("seed list must not be empty");
  return out;
}

std::string Dump(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const auto& [key, field] : Fields()) {
    const auto v = field.get(cfg);
    if (v.empty()) continue;
    out << key << " = " << v << '\n';
  }
  return out.str();
}

}  // namespace motiac::config
