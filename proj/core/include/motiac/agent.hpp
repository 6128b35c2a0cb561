// SPDX-License-Identifier: Apache-2.0
//
// Gaussian bidding policy over the log bid multiplier, Monte-Carlo returns,
// and the aggregated actor / critic / entropy loss with its gradients.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "motiac/nn.hpp"
#include "motiac/objectives.hpp"

namespace motiac::agent {

inline constexpr double kLogSigmaMin = -5.0;
inline constexpr double kLogSigmaMax = 1.0;

/// Policy head for one state: actor output row 0 is mu, row 1 the raw
/// log-sigma before clamping.
struct PolicyHead {
  double mu = 0.0;
  double log_sigma = 0.0;
  bool clamped = false;

  double sigma() const;
};

PolicyHead HeadFromOutput(double mu, double raw_log_sigma);
PolicyHead PolicyForward(const nn::Params& actor, std::span<const double> state);

struct GaussianAction {
  double mu = 0.0;
  double log_sigma = 0.0;
  double z = 0.0;
  double bid = 1.0;  // exp(z) > 0
};

GaussianAction SampleBid(const PolicyHead& head, std::mt19937_64& rng);
double LogProb(const PolicyHead& head, double z);
double Entropy(const PolicyHead& head);

/// R_i = r_i + gamma * R_{i+1}, R_last = r_last.
std::vector<double> DiscountedReturns(std::span<const double> rewards, double gamma);

struct Transition {
  std::vector<double> state;
  GaussianAction action;
  double reward = 0.0;  // the reward this learner trains on
  int objective = 0;    // worker group that produced it
  // Raw per-objective rewards for the same step (CPA, conversions).
  std::array<double, objectives::kNumObjectives> objective_rewards{};
};

struct Trajectory {
  std::vector<Transition> steps;
  bool terminal = false;
};

struct LossWeights {
  double actor = 1.0;
  double critic = 0.5;
  double entropy = 0.01;

  void Validate() const;
};

struct UpdateStats {
  std::size_t steps = 0;
  double mean_advantage = 0.0;
  double mean_entropy = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

struct UpdateResult {
  nn::Grad actor_grad;
  nn::Grad critic_grad;
  UpdateStats stats;
};

/// Descent gradients of
///   actor:  -eta1 * sum_i (R_i - V(s_i)) log pi(z_i | s_i) - eta3 * sum_i H_i
///   critic:  eta2 * 1/2 * sum_i (R_i - V(s_i))^2
/// with the advantage held constant for the actor. Several trajectories are
/// summed; returns are never carried across trajectory boundaries.
UpdateResult ComputeUpdate(std::span<const Trajectory> trajectories, const nn::Params& actor,
                           const nn::Params& critic, const LossWeights& weights, double gamma);
UpdateResult ComputeUpdate(const Trajectory& trajectory, const nn::Params& actor,
                           const nn::Params& critic, const LossWeights& weights, double gamma);

/// Scalar losses matching ComputeUpdate, for finite-difference checks. The
/// actor loss takes the advantages as given constants.
double ActorLoss(const nn::Params& actor, const Eigen::MatrixXd& states, std::span<const double> z,
                 std::span<const double> advantages, const LossWeights& weights);
double CriticLoss(const nn::Params& critic, const Eigen::MatrixXd& states,
                  std::span<const double> returns, const LossWeights& weights);

/// Gradient of sum_i c_i * log pi(z_i | s_i) with respect to the actor.
nn::Grad ScoreGradient(const nn::Params& actor, const Eigen::MatrixXd& states,
                       std::span<const double> z, std::span<const double> coefficients);

/// Stacks trajectory states column-wise.
Eigen::MatrixXd StateMatrix(std::span<const Trajectory> trajectories);

}  // namespace motiac::agent
