// SPDX-License-Identifier: Apache-2.0
//
// Reference bidders: a PID controller on the CPA log-ratio, a fixed
// value bidder, and the reward-combination / single-objective A3C variants
// (which reuse the multi-objective trainer with a single critic).

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "motiac/objectives.hpp"
#include "motiac/rtb_env.hpp"
#include "motiac/trainer.hpp"

namespace motiac::baselines {

struct PidGains {
  double kp = 0.4;
  double ki = 0.05;
  double kd = 0.1;
};

struct PidState {
  PidGains gains;
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev = false;
  // Per-step control clamp on u (log of the bid change).
  double u_lo = -0.5;
  double u_hi = 0.5;

  void Validate() const;
};

struct BidBounds {
  double lo = 0.01;
  double hi = 100.0;
};

struct PidStep {
  double bid = 0.0;
  double error = 0.0;
  double control = 0.0;
  bool saturated = false;
  PidState state;
};

/// e = ln(cpa_target / CPA_real), 0 before the first conversion;
/// u = kp e + ki (integral + e) + kd (e - e_prev), clamped to [u_lo, u_hi];
/// bid = clamp(prev_bid * exp(u), bounds). While u or the bid is clamped
/// the integral is left as it was.
PidStep PidBid(double cpa_target, const objectives::AdTotals& totals, double prev_bid,
               const PidState& pid, const BidBounds& bounds);

/// PidBid on the submitted cpcbid with bounds [0.01, 100] * cpa_target.
PidStep PidBid(const rtb::AdCampaign& ad, const objectives::AdTotals& totals, double prev_bid,
               const PidState& pid);

/// multiplier * cpa_target * pCVR; multiplier 1 bids the predicted value of
/// a click.
double FixedBid(const rtb::AdCampaign& ad, double pcvr, double multiplier = 1.0);

struct PidConfig {
  PidGains gains;
  double u_lo = -0.5;
  double u_hi = 0.5;
  BidBounds multiplier_bounds{0.01, 100.0};
};

struct EpisodeTrace {
  train::EpisodeMetrics metrics;
  // conversions[ad][session]
  std::vector<std::vector<double>> conversions;
};

/// One day (env already reset) with every ad's cpcbid = m * cpa_target * pCVR
/// and m driven by a per-ad PID controller, starting at m = 1.
EpisodeTrace PidEpisode(rtb::Environment& env, const PidConfig& cfg);

/// One day with a constant multiplier on the predicted click value.
EpisodeTrace FixedEpisode(rtb::Environment& env, double multiplier);

/// `episodes` evaluation days on the same env seeds the trainer uses for
/// (iteration, group 0, worker 0). Rows use group 0, worker 0, weight 1.
train::TrainReport EvaluatePid(const train::EnvFactory& make_env, std::uint64_t seed, int episodes,
                               const PidConfig& cfg = {});
train::TrainReport EvaluateFixed(const train::EnvFactory& make_env, std::uint64_t seed,
                                 int episodes, double multiplier = 1.0);

/// Seed-averaged PID conversions per session on day 0, as a running sum.
objectives::ConversionsBase PidConversionsBase(const std::vector<rtb::AdCampaign>& catalog,
                                               const rtb::EnvConfig& env_config,
                                               std::span<const std::uint64_t> seeds,
                                               const PidConfig& cfg = {});

/// Single critic on a fixed blend of the objective rewards. The blend must
/// be non-negative and sum to 1.
void ValidateCombination(std::span<const double> combo);
train::TrainReport AggA3cTrain(train::TrainConfig cfg, std::span<const double> combo,
                               const train::EnvFactory& make_env);

/// Single-objective ablations: the CPA reward only, the conversions reward only.
train::TrainReport O1Train(train::TrainConfig cfg, const train::EnvFactory& make_env);
train::TrainReport O2Train(train::TrainConfig cfg, const train::EnvFactory& make_env);

}  // namespace motiac::baselines
