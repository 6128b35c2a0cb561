// SPDX-License-Identifier: Apache-2.0
//
// Multi-objective asynchronous actor-critic trainer. One global actor is
// shared by K objective groups; each group owns one critic. Workers roll
// out a full day against a private environment, compute gradients for
// their own objective and push them, scaled by the group's priority weight,
// into the actor and their group's critic.

#pragma once

#include <cstdint>
#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "motiac/agent.hpp"
#include "motiac/nn.hpp"
#include "motiac/priority.hpp"
#include "motiac/rtb_env.hpp"

namespace motiac::train {

enum class Mode { kDeterministic, kConcurrent };

std::string_view ToString(Mode mode);
Mode ParseMode(std::string_view name);

struct TrainConfig {
  // One row per worker group: coefficients over the base objectives
  // (CPA, conversions). The default is the two-group partition; a single
  // row gives the single-critic learners.
  std::vector<std::vector<double>> groups{{1.0, 0.0}, {0.0, 1.0}};
  int workers_per_group = 5;
  int iterations = 200;
  std::uint64_t seed = 1;
  double gamma = 0.99;
  agent::LossWeights loss;
  nn::AdamConfig actor_adam;
  nn::AdamConfig critic_adam;
  std::vector<std::size_t> hidden{64, 64};
  nn::Activation activation = nn::Activation::kTanh;
  priority::PrioritySchedule schedule;
  Mode mode = Mode::kDeterministic;
  int threads = 0;  // 0: MOTIAC_THREADS, else hardware concurrency

  int num_groups() const { return static_cast<int>(groups.size()); }
  nn::NetLayout actor_layout() const;
  nn::NetLayout critic_layout() const;
  void Validate() const;
};

/// Thread cap from MOTIAC_THREADS (falls back to hardware concurrency).
int ResolveThreads(int requested);

struct EpisodeMetrics {
  double revenue = 0.0;
  double cost = 0.0;
  double roi = 1.0;
  std::int64_t clicks = 0;
  std::int64_t conversions = 0;
};

struct WeightedUpdate {
  int iteration = 0;
  int group = 0;
  int worker = 0;
  double weight = 1.0;
  priority::PriorityWeights weights{{1.0}};
  std::vector<double> mean_rewards;  // per group reward definition
  nn::Grad actor_grad;
  nn::Grad critic_grad;  // for critic `group` only
  std::uint64_t actor_version = 0;  // snapshot versions the update was computed from
  std::uint64_t critic_version = 0;
  EpisodeMetrics metrics;
  agent::UpdateStats stats;

  /// Gradient for critic j; nullptr for every critic outside this group.
  const nn::Grad* CriticGrad(int j) const { return j == group ? &critic_grad : nullptr; }
};

/// Global network: one actor, K critics, one Adam state each, version
/// counters, and the per-group carried prior. Snapshots are consistent per
/// component; updates are serialized on the actor and per critic.
class GlobalParams {
 public:
  GlobalParams(nn::Params actor, std::vector<nn::Params> critics, const nn::AdamConfig& actor_adam,
               const nn::AdamConfig& critic_adam);

  struct Snapshot {
    nn::Params actor;
    nn::Params critic;
    std::uint64_t actor_version = 0;
    std::uint64_t critic_version = 0;
    priority::PriorityWeights prior{{1.0}};
  };
  Snapshot Take(int group) const;

  /// Adam step on the actor and on critic `upd.group`. A non-finite gradient
  /// rejects the whole update, leaves counters alone and returns false.
  bool Apply(const WeightedUpdate& upd, const priority::PrioritySchedule& schedule);

  int num_critics() const { return static_cast<int>(critics_.size()); }
  nn::Params actor() const;
  nn::Params critic(int k) const;
  std::uint64_t actor_version() const;
  std::uint64_t critic_version(int k) const;
  priority::PriorityWeights prior(int k) const;

 private:
  mutable std::mutex actor_mu_;
  nn::Params actor_;
  nn::AdamState actor_adam_;
  std::uint64_t actor_version_ = 0;

  struct CriticSlot {
    explicit CriticSlot(nn::Params p, const nn::AdamConfig& adam)
        : params(std::move(p)), adam(params.layout(), adam) {}
    mutable std::mutex mu;
    nn::Params params;
    nn::AdamState adam;
    std::uint64_t version = 0;
    priority::PriorityWeights prior{{1.0}};
  };
  std::vector<std::unique_ptr<CriticSlot>> critics_;
};

/// Submitted cpcbid for a sampled action: the action's positive multiplier
/// times the ad's predicted value per click (cpa_target * pCVR).
double CpcBid(const agent::GaussianAction& action, const rtb::AdCampaign& ad, double pcvr);

/// Per-step rewards for the two base objectives after a session.
std::array<double, objectives::kNumObjectives> ObjectiveRewards(const rtb::Environment& env,
                                                                std::size_t ad_index);

struct Rollout {
  std::vector<agent::Trajectory> trajectories;  // one per ad
  EpisodeMetrics metrics;
};

/// One day against `env` (reset by the caller) with bids sampled from the
/// actor. Transitions are tagged with `group` and carry reward
/// sum_j mix_j * objective_rewards_j.
Rollout RolloutEpisode(const nn::Params& actor, rtb::Environment& env,
                       std::span<const double> reward_mix, int group, std::mt19937_64& rng);

EpisodeMetrics SummarizeEpisode(const rtb::Environment& env);

/// Seeds for worker (iteration, group, worker).
std::uint64_t EnvSeed(const TrainConfig& cfg, int iteration, int group, int worker);
std::uint64_t WorkerSeed(const TrainConfig& cfg, int iteration, int group, int worker);

/// Synchronize from `snapshot`, reset `env` to day `iteration`, roll out one
/// episode, compute the loss gradients and scale them by the schedule weight.
WeightedUpdate WorkerIteration(int iteration, int group, int worker,
                               const GlobalParams::Snapshot& snapshot, rtb::Environment& env,
                               const TrainConfig& cfg);

struct ReportRow {
  int iteration = 0;
  int group = 0;
  int worker = 0;
  double revenue = 0.0;
  double cost = 0.0;
  double roi = 1.0;
  std::vector<double> weights;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct TrainReport {
  std::string model;
  int num_groups = 1;
  std::vector<ReportRow> rows;
  std::int64_t episodes = 0;
  std::int64_t rejected_updates = 0;
  std::optional<nn::Params> actor;
  std::vector<nn::Params> critics;
};

using EnvFactory = std::function<rtb::Environment()>;

/// Runs iterations x (K x workers) worker iterations. Deterministic mode
/// snapshots the global network once per iteration, rolls workers out in
/// parallel and applies their updates in (group, worker) order, so the
/// result does not depend on the thread count. Concurrent mode lets every
/// worker loop on its own against the live network.
TrainReport Train(const TrainConfig& cfg, const EnvFactory& make_env, std::string model = "motiac");

struct FinalMetrics {
  double revenue = 0.0;  // mean per episode
  double cost = 0.0;
  double roi = 1.0;      // total revenue / total cost over the window
};

/// Aggregate over the last `window` iterations of a report.
FinalMetrics Final(const TrainReport& report, int window);

}  // namespace motiac::train
