// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "motiac/agent.hpp"

namespace motiac::agent {
namespace {

nn::Params SmallActor(std::uint64_t seed) {
  auto p = nn::InitParams(nn::NetLayout({4, 5, 2}, nn::Activation::kTanh), seed);
  p.layer(1).bias(1) = -0.7;  // log-sigma well inside the clamp
  return p;
}

Trajectory RandomTrajectory(int steps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Trajectory t;
  for (int i = 0; i < steps; ++i) {
    Transition s;
    s.state = {u(rng), u(rng), u(rng), u(rng)};
    s.action.z = u(rng);
    s.reward = 2.0 * u(rng);
    t.steps.push_back(s);
  }
  t.terminal = true;
  return t;
}

TEST(PolicyHead, ClampsLogSigma) {
  auto h = HeadFromOutput(0.2, 3.0);
  EXPECT_EQ(h.log_sigma, kLogSigmaMax);
  EXPECT_TRUE(h.clamped);
  h = HeadFromOutput(0.2, -9.0);
  EXPECT_EQ(h.log_sigma, kLogSigmaMin);
  h = HeadFromOutput(0.2, 0.5);
  EXPECT_FALSE(h.clamped);
  EXPECT_DOUBLE_EQ(h.sigma(), std::exp(0.5));
}

TEST(Gaussian, LogProbAndEntropyClosedForm) {
  const PolicyHead h{0.3, -0.5, false};
  EXPECT_NEAR(LogProb(h, 1.0), -1.0849175811771388, 1e-14);
  EXPECT_NEAR(Entropy(h), 0.9189385332046727, 1e-14);
}

TEST(Gaussian, SampleBidIsExpOfZ) {
  std::mt19937_64 rng(3);
  const PolicyHead h{0.4, std::log(0.2), false};
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto a = SampleBid(h, rng);
    EXPECT_DOUBLE_EQ(a.bid, std::exp(a.z));
    EXPECT_EQ(a.mu, 0.4);
    sum += a.z;
  }
  EXPECT_NEAR(sum / n, 0.4, 4.0 * 0.2 / std::sqrt(n));
}

TEST(Returns, DiscountedBackwards) {
  const std::vector<double> r{1.0, 2.0, 3.0};
  EXPECT_EQ(DiscountedReturns(r, 0.5), (std::vector<double>{2.75, 3.5, 3.0}));
  EXPECT_EQ(DiscountedReturns(r, 0.0), r);
  EXPECT_THROW(DiscountedReturns({}, 0.9), std::invalid_argument);
}

TEST(LossWeights, RejectsNegative) {
  LossWeights w;
  w.critic = -1.0;
  EXPECT_THROW(w.Validate(), std::invalid_argument);
}

TEST(ComputeUpdate, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(21);
  const LossWeights weights{1.0, 0.5, 0.01};
  for (int n = 0; n < 20; ++n) {
    const auto actor = SmallActor(rng());
    const auto critic = nn::InitParams(nn::NetLayout({4, 6, 1}, nn::Activation::kTanh), rng());
    const auto traj = RandomTrajectory(1 + n % 5, rng);
    const auto upd = ComputeUpdate(traj, actor, critic, weights, 0.95);

    std::vector<double> rewards;
    std::vector<double> z;
    for (const auto& s : traj.steps) {
      rewards.push_back(s.reward);
      z.push_back(s.action.z);
    }
    const auto states = StateMatrix(std::span(&traj, 1));
    const auto returns = DiscountedReturns(rewards, 0.95);
    const auto values = nn::Predict(critic, states);
    std::vector<double> adv(returns.size());
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = returns[i] - values(0, static_cast<Eigen::Index>(i));

    const auto actor_fd = nn::FiniteDiffGrad(
        actor, [&](const nn::Params& p) { return ActorLoss(p, states, z, adv, weights); }, 1e-5);
    const auto critic_fd = nn::FiniteDiffGrad(
        critic, [&](const nn::Params& p) { return CriticLoss(p, states, returns, weights); }, 1e-5);
    EXPECT_LE(nn::MaxRelativeError(upd.actor_grad, actor_fd), 1e-4) << n;
    EXPECT_LE(nn::MaxRelativeError(upd.critic_grad, critic_fd), 1e-4) << n;
    EXPECT_NEAR(upd.stats.actor_loss, ActorLoss(actor, states, z, adv, weights), 1e-10);
    EXPECT_NEAR(upd.stats.critic_loss, CriticLoss(critic, states, returns, weights), 1e-10);
  }
}

TEST(ComputeUpdate, ReturnsStopAtTrajectoryBoundaries) {
  std::mt19937_64 rng(5);
  const auto actor = SmallActor(1);
  const auto critic = nn::InitParams(nn::NetLayout({4, 3, 1}, nn::Activation::kTanh), 2);
  const std::vector<Trajectory> two{RandomTrajectory(4, rng), RandomTrajectory(3, rng)};
  const LossWeights w;
  const auto joint = ComputeUpdate(two, actor, critic, w, 0.9);
  auto sum_actor = ComputeUpdate(two[0], actor, critic, w, 0.9).actor_grad;
  auto sum_critic = ComputeUpdate(two[0], actor, critic, w, 0.9).critic_grad;
  sum_actor += ComputeUpdate(two[1], actor, critic, w, 0.9).actor_grad;
  sum_critic += ComputeUpdate(two[1], actor, critic, w, 0.9).critic_grad;
  EXPECT_LE(nn::MaxRelativeError(joint.actor_grad, sum_actor), 1e-12);
  EXPECT_LE(nn::MaxRelativeError(joint.critic_grad, sum_critic), 1e-12);
  EXPECT_EQ(joint.stats.steps, 7u);
}

TEST(ComputeUpdate, LargeBatchesAgreeWithScoreGradient) {
  // Many columns exercise the blocked path; with no critic or entropy weight
  // the actor gradient is exactly -sum_i A_i grad log pi.
  std::mt19937_64 rng(8);
  const auto actor = SmallActor(4);
  nn::Params critic(nn::NetLayout({4, 2, 1}, nn::Activation::kTanh));
  const std::vector<Trajectory> batch{RandomTrajectory(300, rng), RandomTrajectory(257, rng)};
  const LossWeights w{1.0, 0.0, 0.0};
  const auto upd = ComputeUpdate(batch, actor, critic, w, 0.0);
  std::vector<double> z;
  std::vector<double> coeff;
  for (const auto& t : batch) {
    for (const auto& s : t.steps) {
      z.push_back(s.action.z);
      coeff.push_back(-s.reward);  // gamma 0 and a zero critic: A_i = r_i
    }
  }
  const auto want = ScoreGradient(actor, StateMatrix(batch), z, coeff);
  EXPECT_LE(nn::MaxRelativeError(upd.actor_grad, want), 1e-10);
}

TEST(ComputeUpdate, ClampedHeadGetsNoLogSigmaGradient) {
  auto actor = SmallActor(2);
  actor.layer(1).bias(1) = 50.0;
  nn::Params critic(nn::NetLayout({4, 2, 1}, nn::Activation::kTanh));
  std::mt19937_64 rng(1);
  const auto traj = RandomTrajectory(3, rng);
  const auto upd = ComputeUpdate(traj, actor, critic, LossWeights{}, 0.9);
  EXPECT_EQ(upd.actor_grad.layer(1).bias(1), 0.0);
  EXPECT_EQ(upd.actor_grad.layer(1).weight.row(1).cwiseAbs().sum(), 0.0);
}

TEST(ComputeUpdate, RejectsWrongHeads) {
  const auto actor = SmallActor(1);
  std::mt19937_64 rng(1);
  const auto traj = RandomTrajectory(2, rng);
  const auto bad_critic = nn::InitParams(nn::NetLayout({4, 2}, std::vector<nn::Activation>{}), 1);
  EXPECT_THROW(ComputeUpdate(traj, actor, bad_critic, LossWeights{}, 0.9), std::invalid_argument);
}

}  // namespace
}  // namespace motiac::agent
