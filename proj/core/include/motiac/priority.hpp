// SPDX-License-Identifier: Apache-2.0
//
// Objective priority weights w_k = p(phi = k | tau): the uniform prior, the
// Bayes-rule posterior, and the fixed schedules they are compared against.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motiac/agent.hpp"

namespace motiac::priority {

inline constexpr double kSimplexTolerance = 1e-12;

/// A point on the probability simplex.
class PriorityWeights {
 public:
  explicit PriorityWeights(std::vector<double> w);

  std::span<const double> values() const { return w_; }
  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t k) const { return w_.at(k); }

  friend bool operator==(const PriorityWeights&, const PriorityWeights&) = default;

 private:
  std::vector<double> w_;
};

PriorityWeights PriorInit(int num_objectives);

/// p(tau | phi = k) = exp(beta * mean per-step reward).
double Likelihood(double mean_reward, double beta);
double Likelihood(const agent::Trajectory& trajectory, int objective, double beta);

/// Mean of sum_j mix_j * objective_rewards_j over every step of every
/// trajectory.
double MeanMixedReward(std::span<const agent::Trajectory> trajectories, std::span<const double> mix);

/// w'_k = L_k w_k / sum_j L_j w_j. Throws on a likelihood that is not
/// finite and strictly positive.
PriorityWeights PosteriorUpdate(const PriorityWeights& prior, std::span<const double> likelihoods);

struct PrioritySchedule {
  enum class Kind { kEqual, kChanging, kRandom, kBayesian };

  Kind kind = Kind::kBayesian;
  double alpha = 0.01;       // changing: w_1 = exp(-alpha t)
  double beta = 2.0;         // bayesian likelihood temperature
  bool carry_prior = false;  // bayesian: keep the posterior as the next prior

  void Validate() const;
};

std::string_view ToString(PrioritySchedule::Kind kind);
PrioritySchedule::Kind ParseScheduleKind(std::string_view name);

/// Full weight vector for one worker episode. `mean_rewards` holds the
/// episode's mean reward under each group's reward definition and is only
/// read by the bayesian schedule; `prior` is the bayesian starting point.
PriorityWeights ScheduleWeights(const PrioritySchedule& schedule, int num_objectives, int iteration,
                                std::span<const double> mean_rewards, const PriorityWeights& prior,
                                std::mt19937_64& rng);

double ScheduleWeight(const PrioritySchedule& schedule, int objective, int num_objectives,
                      int iteration, std::span<const double> mean_rewards,
                      const PriorityWeights& prior, std::mt19937_64& rng);

}  // namespace motiac::priority
