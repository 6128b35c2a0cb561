// SPDX-License-Identifier: Apache-2.0
#include "motiac/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace motiac::baselines {

namespace {

constexpr double kCpaFloor = 1e-9;

train::TrainReport EvaluationReport(const train::EnvFactory& make_env, std::uint64_t seed,
                                    int episodes, const char* model,
                                    const std::function<EpisodeTrace(rtb::Environment&)>& run) {
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
  train::TrainConfig seeds;
  seeds.seed = seed;
  auto env = make_env();
  train::TrainReport report;
  report.model = model;
  report.num_groups = 1;
  for (int it = 0; it < episodes; ++it) {
    env.Reset(it, train::EnvSeed(seeds, it, 0, 0));
    const auto trace = run(env);
    train::ReportRow row;
    row.iteration = it;
    row.revenue = trace.metrics.revenue;
    row.cost = trace.metrics.cost;
    row.roi = trace.metrics.roi;
    row.weights = {1.0};
    report.rows.push_back(std::move(row));
    ++report.episodes;
  }
  return report;
}

EpisodeTrace RunEpisode(rtb::Environment& env,
                        const std::function<double(std::size_t)>& multiplier,
                        const std::function<void(std::size_t)>& after_step) {
  const auto& catalog = env.catalog();
  EpisodeTrace trace;
  trace.conversions.assign(catalog.size(), {});
  std::vector<double> bids(catalog.size());
  while (!env.day_over()) {
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      bids[i] = FixedBid(catalog[i], env.predicted_cvr(i), multiplier(i));
    }
    const auto outcome = env.Step(bids);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      trace.conversions[i].push_back(static_cast<double>(outcome[i].conversions));
      after_step(i);
    }
  }
  trace.metrics = train::SummarizeEpisode(env);
  return trace;
}

}  // namespace

void PidState::Validate() const {
  if (!(std::isfinite(u_lo) && std::isfinite(u_hi) && u_lo < u_hi)) {
    throw std::invalid_argument("PidState: clamp bounds must be finite with lo < hi");
  }
}

PidStep PidBid(double cpa_target, const objectives::AdTotals& totals, double prev_bid,
               const PidState& pid, const BidBounds& bounds) {
  pid.Validate();
  if (!(prev_bid > 0.0)) throw std::invalid_argument("PidBid: previous bid must be > 0");
  if (!(bounds.lo > 0.0 && bounds.lo < bounds.hi)) throw std::invalid_argument("PidBid: bad bid bounds");

  PidStep out;
  out.error = totals.conversions == 0
                  ? 0.0
                  : std::log(cpa_target / std::max(objectives::CpaReal(totals), kCpaFloor));
  const double derivative = pid.has_prev ? out.error - pid.prev_error : 0.0;
  const double integral = pid.integral + out.error;
  const double raw = pid.gains.kp * out.error + pid.gains.ki * integral + pid.gains.kd * derivative;
  out.control = std::clamp(raw, pid.u_lo, pid.u_hi);
  const double raw_bid = prev_bid * std::exp(out.control);
  out.bid = std::clamp(raw_bid, bounds.lo, bounds.hi);
  out.saturated = out.control != raw || out.bid != raw_bid;

  out.state = pid;
  if (!out.saturated) out.state.integral = integral;
  out.state.prev_error = out.error;
  out.state.has_prev = true;
  return out;
}

PidStep PidBid(const rtb::AdCampaign& ad, const objectives::AdTotals& totals, double prev_bid,
               const PidState& pid) {
  return PidBid(ad.cpa_target, totals, prev_bid, pid,
                BidBounds{0.01 * ad.cpa_target, 100.0 * ad.cpa_target});
}

double FixedBid(const rtb::AdCampaign& ad, double pcvr, double multiplier) {
  if (!(multiplier > 0.0)) throw std::invalid_argument("FixedBid: multiplier must be > 0");
  return multiplier * ad.cpa_target * pcvr;
}

EpisodeTrace PidEpisode(rtb::Environment& env, const PidConfig& cfg) {
  const std::size_t n = env.catalog().size();
  PidState init;
  init.gains = cfg.gains;
  init.u_lo = cfg.u_lo;
  init.u_hi = cfg.u_hi;
  std::vector<PidState> states(n, init);
  std::vector<double> m(n, 1.0);
  return RunEpisode(
      env, [&](std::size_t i) { return m[i]; },
      [&](std::size_t i) {
        const auto step = PidBid(env.catalog()[i].cpa_target, env.totals(i), m[i], states[i],
                                 cfg.multiplier_bounds);
        m[i] = step.bid;
        states[i] = step.state;
      });
}

EpisodeTrace FixedEpisode(rtb::Environment& env, double multiplier) {
  return RunEpisode(env, [&](std::size_t) { return multiplier; }, [](std::size_t) {});
}

train::TrainReport EvaluatePid(const train::EnvFactory& make_env, std::uint64_t seed, int episodes,
                               const PidConfig& cfg) {
  return EvaluationReport(make_env, seed, episodes, "pid",
                          [&](rtb::Environment& env) { return PidEpisode(env, cfg); });
}

train::TrainReport EvaluateFixed(const train::EnvFactory& make_env, std::uint64_t seed,
                                 int episodes, double multiplier) {
  return EvaluationReport(make_env, seed, episodes, "fixed",
                          [&](rtb::Environment& env) { return FixedEpisode(env, multiplier); });
}

objectives::ConversionsBase PidConversionsBase(const std::vector<rtb::AdCampaign>& catalog,
                                               const rtb::EnvConfig& env_config,
                                               std::span<const std::uint64_t> seeds,
                                               const PidConfig& cfg) {
  if (seeds.empty()) throw std::invalid_argument("PidConversionsBase: need at least one seed");
  std::vector<std::vector<double>> mean(catalog.size(),
                                        std::vector<double>(rtb::kSessionsPerDay, 0.0));
  rtb::Environment env(catalog, env_config, 0);
  for (auto seed : seeds) {
    train::TrainConfig seeds_cfg;
    seeds_cfg.seed = seed;
    env.Reset(0, train::EnvSeed(seeds_cfg, 0, 0, 0));
    const auto trace = PidEpisode(env, cfg);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      for (int s = 0; s < rtb::kSessionsPerDay; ++s) {
        mean[i][static_cast<std::size_t>(s)] += trace.conversions[i][static_cast<std::size_t>(s)];
      }
    }
  }
  for (auto& row : mean) {
    for (auto& v : row) v /= static_cast<double>(seeds.size());
  }
  std::vector<std::int32_t> ids;
  for (const auto& ad : catalog) ids.push_back(ad.id);
  return objectives::BuildConversionsBase(std::move(ids), mean, rtb::kSessionsPerDay);
}

void ValidateCombination(std::span<const double> combo) {
  if (combo.size() != static_cast<std::size_t>(objectives::kNumObjectives)) {
    throw std::invalid_argument("combination: one weight per objective required");
  }
  for (double w : combo) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("combination: weights must lie in [0, 1]");
  }
  const double sum = std::accumulate(combo.begin(), combo.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("combination: weights must sum to 1");
}

train::TrainReport AggA3cTrain(train::TrainConfig cfg, std::span<const double> combo,
                               const train::EnvFactory& make_env) {
  ValidateCombination(combo);
  cfg.groups = {std::vector<double>(combo.begin(), combo.end())};
  return train::Train(cfg, make_env, "agg_a3c");
}

train::TrainReport O1Train(train::TrainConfig cfg, const train::EnvFactory& make_env) {
  cfg.groups = {{1.0, 0.0}};
  return train::Train(cfg, make_env, "o1");
}

train::TrainReport O2Train(train::TrainConfig cfg, const train::EnvFactory& make_env) {
  cfg.groups = {{0.0, 1.0}};
  return train::Train(cfg, make_env, "o2");
}

}  // namespace motiac::baselines
