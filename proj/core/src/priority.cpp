// SPDX-License-Identifier: Apache-2.0
#include "motiac/priority.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "motiac/io_util.hpp"

namespace motiac::priority {

PriorityWeights::PriorityWeights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw std::invalid_argument("PriorityWeights: need at least one objective");
  double sum = 0.0;
  for (double v : w_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("PriorityWeights: entry outside [0, 1]: " + io::FormatDouble(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("PriorityWeights: entries sum to " + io::FormatDouble(sum));
  }
}

PriorityWeights PriorInit(int num_objectives) {
  if (num_objectives < 1) throw std::invalid_argument("PriorInit: K must be >= 1");
  return PriorityWeights(std::vector<double>(static_cast<std::size_t>(num_objectives),
                                             1.0 / static_cast<double>(num_objectives)));
}

double Likelihood(double mean_reward, double beta) {
  const double l = std::exp(beta * mean_reward);
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw std::domain_error("Likelihood: exp(beta * reward) is not a positive finite number");
  }
  return l;
}

double Likelihood(const agent::Trajectory& trajectory, int objective, double beta) {
  if (trajectory.steps.empty()) throw std::invalid_argument("Likelihood: empty trajectory");
  if (objective < 0 || objective >= objectives::kNumObjectives) {
    throw std::out_of_range("Likelihood: objective index out of range");
  }
  std::vector<double> mix(objectives::kNumObjectives, 0.0);
  mix[static_cast<std::size_t>(objective)] = 1.0;
  return Likelihood(MeanMixedReward(std::span(&trajectory, 1), mix), beta);
}

double MeanMixedReward(std::span<const agent::Trajectory> trajectories, std::span<const double> mix) {
  if (mix.size() != static_cast<std::size_t>(objectives::kNumObjectives)) {
    throw std::invalid_argument("MeanMixedReward: one coefficient per objective required");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : trajectories) {
    for (const auto& s : t.steps) {
      for (std::size_t j = 0; j < mix.size(); ++j) sum += mix[j] * s.objective_rewards[j];
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("MeanMixedReward: no transitions");
  return sum / static_cast<double>(n);
}

PriorityWeights PosteriorUpdate(const PriorityWeights& prior, std::span<const double> likelihoods) {
  if (likelihoods.size() != prior.size()) {
    throw std::invalid_argument("PosteriorUpdate: one likelihood per objective required");
  }
  std::vector<double> w(prior.size());
  double norm = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double l = likelihoods[k];
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("PosteriorUpdate: likelihoods must be positive and finite");
    }
    w[k] = l * prior[k];
    norm += w[k];
  }
  if (!(norm > 0.0)) throw std::domain_error("PosteriorUpdate: evidence underflowed to zero");
  for (auto& v : w) v /= norm;
  // Pin the last entry so the sum is 1 up to a single rounding.
  if (w.size() > 1) {
    const double head = std::accumulate(w.begin(), w.end() - 1, 0.0);
    w.back() = std::max(0.0, 1.0 - head);
  }
  return PriorityWeights(std::move(w));
}

void PrioritySchedule::Validate() const {
  if (kind == Kind::kChanging && !(alpha > 0.0)) {
    throw std::invalid_argument("changing schedule needs alpha > 0");
  }
  if (kind == Kind::kBayesian && !(beta > 0.0)) {
    throw std::invalid_argument("bayesian schedule needs beta > 0");
  }
}

std::string_view ToString(PrioritySchedule::Kind kind) {
  switch (kind) {
    case PrioritySchedule::Kind::kEqual:
      return "equal";
    case PrioritySchedule::Kind::kChanging:
      return "changing";
    case PrioritySchedule::Kind::kRandom:
      return "random";
    case PrioritySchedule::Kind::kBayesian:
      return "bayesian";
  }
  return "equal";
}

PrioritySchedule::Kind ParseScheduleKind(std::string_view name) {
  name = io::Trim(name);
  if (name == "equal") return PrioritySchedule::Kind::kEqual;
  if (name == "changing") return PrioritySchedule::Kind::kChanging;
  if (name == "random") return PrioritySchedule::Kind::kRandom;
  if (name == "bayesian") return PrioritySchedule::Kind::kBayesian;
  throw std::invalid_argument("unknown priority schedule '" + std::string(name) + "'");
}

PriorityWeights ScheduleWeights(const PrioritySchedule& schedule, int num_objectives, int iteration,
                                std::span<const double> mean_rewards, const PriorityWeights& prior,
                                std::mt19937_64& rng) {
  if (num_objectives < 1) throw std::invalid_argument("ScheduleWeights: K must be >= 1");
  if (iteration < 0) throw std::invalid_argument("ScheduleWeights: iteration must be >= 0");
  if (num_objectives == 1) return PriorityWeights({1.0});
  const auto k = static_cast<std::size_t>(num_objectives);
  switch (schedule.kind) {
    case PrioritySchedule::Kind::kEqual:
      return PriorInit(num_objectives);
    case PrioritySchedule::Kind::kChanging: {
      if (num_objectives != 2) throw std::invalid_argument("changing schedule is defined for K = 2");
      const double w1 = std::exp(-schedule.alpha * static_cast<double>(iteration));
      return PriorityWeights({w1, 1.0 - w1});
    }
    case PrioritySchedule::Kind::kRandom: {
      // Flat Dirichlet; for K = 2 this is w_1 ~ U[0, 1].
      std::vector<double> w(k);
      double sum = 0.0;
      if (k == 2) {
        w[0] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        w[1] = 1.0 - w[0];
        return PriorityWeights(std::move(w));
      }
      std::exponential_distribution<double> e(1.0);
      for (auto& v : w) sum += (v = e(rng));
      for (auto& v : w) v /= sum;
      const double head = std::accumulate(w.begin(), w.end() - 1, 0.0);
      w.back() = std::max(0.0, 1.0 - head);
      return PriorityWeights(std::move(w));
    }
    case PrioritySchedule::Kind::kBayesian: {
      if (mean_rewards.size() != k || prior.size() != k) {
        throw std::invalid_argument("bayesian schedule: need K mean rewards and a K-prior");
      }
      std::vector<double> l(k);
      for (std::size_t j = 0; j < k; ++j) l[j] = Likelihood(mean_rewards[j], schedule.beta);
      return PosteriorUpdate(prior, l);
    }
  }
  throw std::logic_error("unreachable schedule kind");
}

double ScheduleWeight(const PrioritySchedule& schedule, int objective, int num_objectives,
                      int iteration, std::span<const double> mean_rewards,
                      const PriorityWeights& prior, std::mt19937_64& rng) {
  if (objective < 0 || objective >= num_objectives) throw std::out_of_range("ScheduleWeight: bad objective");
  return ScheduleWeights(schedule, num_objectives, iteration, mean_rewards, prior, rng)
      [static_cast<std::size_t>(objective)];
}

}  // namespace motiac::priority
