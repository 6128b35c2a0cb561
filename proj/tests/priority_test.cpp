// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "motiac/priority.hpp"

namespace motiac::priority {
namespace {

double Sum(const PriorityWeights& w) {
  return std::accumulate(w.values().begin(), w.values().end(), 0.0);
}

TEST(PriorityWeights, SimplexValidation) {
  EXPECT_NO_THROW(PriorityWeights({0.25, 0.75}));
  EXPECT_THROW(PriorityWeights({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(PriorityWeights({-0.1, 1.1}), std::invalid_argument);
  EXPECT_THROW(PriorityWeights(std::vector<double>{}), std::invalid_argument);
  EXPECT_EQ(PriorInit(4), PriorityWeights({0.25, 0.25, 0.25, 0.25}));
  EXPECT_THROW(PriorInit(0), std::invalid_argument);
}

TEST(Posterior, HandCase) {
  const auto post = PosteriorUpdate(PriorInit(2), std::vector<double>{2.0, 1.0});
  EXPECT_NEAR(post[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(post[1], 1.0 / 3.0, 1e-12);
}

TEST(Posterior, SimplexScaleInvarianceAndFixedPoint) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int n = 0; n < 100; ++n) {
    const std::size_t k = 2 + static_cast<std::size_t>(n % 5);
    std::vector<double> raw(k);
    for (auto& v : raw) v = u(rng);
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (auto& v : raw) v /= total;
    raw.back() = 1.0 - std::accumulate(raw.begin(), raw.end() - 1, 0.0);
    const PriorityWeights prior(raw);

    std::vector<double> l(k);
    for (auto& v : l) v = u(rng);
    const auto post = PosteriorUpdate(prior, l);
    EXPECT_NEAR(Sum(post), 1.0, 1e-12);

    std::vector<double> scaled(l);
    for (auto& v : scaled) v *= 1234.5;
    const auto post2 = PosteriorUpdate(prior, scaled);
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(post[j], post2[j], 1e-12);

    const auto same = PosteriorUpdate(prior, std::vector<double>(k, u(rng)));
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(same[j], prior[j], 1e-12);
  }
}

TEST(Posterior, RejectsBadLikelihoods) {
  const auto prior = PriorInit(2);
  EXPECT_THROW(PosteriorUpdate(prior, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(PosteriorUpdate(prior, std::vector<double>{1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(PosteriorUpdate(prior, std::vector<double>{1.0, INFINITY}), std::invalid_argument);
}

TEST(Likelihood, ExpOfScaledMeanReward) {
  EXPECT_DOUBLE_EQ(Likelihood(0.5, 2.0), std::exp(1.0));
  EXPECT_THROW(Likelihood(1000.0, 2.0), std::domain_error);

  agent::Trajectory t;
  for (double r : {1.0, 0.0, -0.4}) {
    agent::Transition s;
    s.objective_rewards = {r, 2.0 * r};
    t.steps.push_back(s);
  }
  EXPECT_NEAR(Likelihood(t, 1, 1.0), std::exp(0.4), 1e-15);
  EXPECT_THROW(Likelihood(t, 2, 1.0), std::out_of_range);
  const std::vector<double> mix{0.5, 0.25};
  EXPECT_NEAR(MeanMixedReward(std::span(&t, 1), mix), 0.2, 1e-15);
}

TEST(Schedule, EqualAndChanging) {
  std::mt19937_64 rng(1);
  PrioritySchedule s;
  s.kind = PrioritySchedule::Kind::kEqual;
  EXPECT_EQ(ScheduleWeights(s, 3, 10, {}, PriorInit(3), rng), PriorInit(3));
  s.kind = PrioritySchedule::Kind::kChanging;
  s.alpha = 0.01;
  const auto w = ScheduleWeights(s, 2, 37, {}, PriorInit(2), rng);
  EXPECT_NEAR(w[0], 0.6907343306373547, 1e-15);
  EXPECT_NEAR(w[0] + w[1], 1.0, 1e-15);
  EXPECT_EQ(ScheduleWeights(s, 2, 0, {}, PriorInit(2), rng)[0], 1.0);
  EXPECT_THROW(ScheduleWeights(s, 3, 1, {}, PriorInit(3), rng), std::invalid_argument);
}

TEST(Schedule, RandomIsUniformOnTheSimplex) {
  std::mt19937_64 rng(2);
  PrioritySchedule s;
  s.kind = PrioritySchedule::Kind::kRandom;
  double mean = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto w = ScheduleWeights(s, 2, i, {}, PriorInit(2), rng);
    mean += w[0];
    const auto w3 = ScheduleWeights(s, 3, i, {}, PriorInit(3), rng);
    EXPECT_NEAR(Sum(w3), 1.0, 1e-12);
  }
  EXPECT_NEAR(mean / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Schedule, BayesianPosteriorFromMeanRewards) {
  std::mt19937_64 rng(3);
  PrioritySchedule s;
  s.beta = 2.0;
  const std::vector<double> means{0.5, -0.25};
  const auto w = ScheduleWeights(s, 2, 5, means, PriorInit(2), rng);
  EXPECT_NEAR(w[0], 0.8175744761936437, 1e-15);
  EXPECT_NEAR(ScheduleWeight(s, 1, 2, 5, means, PriorInit(2), rng), 1.0 - 0.8175744761936437, 1e-15);
  EXPECT_THROW(ScheduleWeights(s, 2, 5, std::vector<double>{0.5}, PriorInit(2), rng), std::invalid_argument);
}

TEST(Schedule, SingleObjectiveIsAlwaysOne) {
  std::mt19937_64 rng(3);
  for (auto kind : {PrioritySchedule::Kind::kEqual, PrioritySchedule::Kind::kChanging,
                    PrioritySchedule::Kind::kRandom, PrioritySchedule::Kind::kBayesian}) {
    PrioritySchedule s;
    s.kind = kind;
    EXPECT_EQ(ScheduleWeights(s, 1, 3, {}, PriorInit(1), rng)[0], 1.0);
  }
}

TEST(Schedule, NamesAndValidation) {
  for (auto name : {"equal", "changing", "random", "bayesian"}) EXPECT_EQ(ToString(ParseScheduleKind(name)), name);
  EXPECT_THROW(ParseScheduleKind("greedy"), std::invalid_argument);
  PrioritySchedule s;
  s.beta = 0.0;
  EXPECT_THROW(s.Validate(), std::invalid_argument);
}

}  // namespace
}  // namespace motiac::priority
