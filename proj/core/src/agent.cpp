// SPDX-License-Identifier: Apache-2.0
#include "motiac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace motiac::agent {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void CheckTrajectories(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("ComputeUpdate: no trajectories");
  const int tag = trajectories.front().steps.empty() ? 0 : trajectories.front().steps.front().objective;
  for (const auto& t : trajectories) {
    if (t.steps.empty()) throw std::invalid_argument("ComputeUpdate: empty trajectory");
    for (const auto& s : t.steps) {
      if (s.objective != tag) {
        throw std::invalid_argument("ComputeUpdate: transitions carry mixed objective tags");
      }
      if (!std::isfinite(s.reward)) throw std::invalid_argument("ComputeUpdate: non-finite reward");
    }
  }
}

}  // namespace

double PolicyHead::sigma() const { return std::exp(log_sigma); }

PolicyHead HeadFromOutput(double mu, double raw_log_sigma) {
  PolicyHead head;
  head.mu = mu;
  head.log_sigma = std::clamp(raw_log_sigma, kLogSigmaMin, kLogSigmaMax);
  head.clamped = raw_log_sigma < kLogSigmaMin || raw_log_sigma > kLogSigmaMax;
  return head;
}

PolicyHead PolicyForward(const nn::Params& actor, std::span<const double> state) {
  if (actor.layout().output_size() != 2) {
    throw std::invalid_argument("PolicyForward: actor must have 2 outputs (mu, log_sigma)");
  }
  const auto out = nn::Forward(actor, state).output;
  return HeadFromOutput(out(0, 0), out(1, 0));
}

GaussianAction SampleBid(const PolicyHead& head, std::mt19937_64& rng) {
  GaussianAction a;
  a.mu = head.mu;
  a.log_sigma = head.log_sigma;
  a.z = std::normal_distribution<double>(head.mu, head.sigma())(rng);
  a.bid = std::exp(a.z);
  return a;
}

double LogProb(const PolicyHead& head, double z) {
  const double u = (z - head.mu) / head.sigma();
  return -0.5 * u * u - head.log_sigma - kHalfLog2Pi;
}

double Entropy(const PolicyHead& head) { return 0.5 + kHalfLog2Pi + head.log_sigma; }

std::vector<double> DiscountedReturns(std::span<const double> rewards, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("DiscountedReturns: empty reward list");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("DiscountedReturns: gamma outside [0, 1]");
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    running = rewards[i] + (i + 1 < rewards.size() ? gamma * running : 0.0);
    out[i] = running;
  }
  return out;
}

void LossWeights::Validate() const {
  if (!(actor > 0.0)) throw std::invalid_argument("LossWeights: eta1 must be > 0");
  if (critic < 0.0 || entropy < 0.0) throw std::invalid_argument("LossWeights: weights must be >= 0");
}

Eigen::MatrixXd StateMatrix(std::span<const Trajectory> trajectories) {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps.size();
  if (n == 0) return {};
  const auto dim = static_cast<Eigen::Index>(trajectories.front().steps.front().state.size());
  Eigen::MatrixXd states(dim, static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (const auto& t : trajectories) {
    for (const auto& s : t.steps) {
      if (static_cast<Eigen::Index>(s.state.size()) != dim) {
        throw std::invalid_argument("StateMatrix: inconsistent state dimension");
      }
      for (Eigen::Index r = 0; r < dim; ++r) states(r, col) = s.state[static_cast<std::size_t>(r)];
      ++col;
    }
  }
  return states;
}

UpdateResult ComputeUpdate(std::span<const Trajectory> trajectories, const nn::Params& actor,
                           const nn::Params& critic, const LossWeights& weights, double gamma) {
  CheckTrajectories(trajectories);
  weights.Validate();
  if (actor.layout().output_size() != 2 || critic.layout().output_size() != 1) {
    throw std::invalid_argument("ComputeUpdate: actor needs 2 outputs and critic 1");
  }
  const Eigen::MatrixXd states = StateMatrix(trajectories);
  const auto n = states.cols();

  std::vector<double> returns;
  std::vector<double> z;
  returns.reserve(static_cast<std::size_t>(n));
  z.reserve(static_cast<std::size_t>(n));
  std::vector<double> rewards;
  for (const auto& t : trajectories) {
    rewards.clear();
    for (const auto& s : t.steps) {
      rewards.push_back(s.reward);
      z.push_back(s.action.z);
    }
    const auto r = DiscountedReturns(rewards, gamma);
    returns.insert(returns.end(), r.begin(), r.end());
  }

  // Column blocks keep the hidden activations cache-resident; every output
  // gradient depends on its own column only, so blocks sum exactly.
  constexpr Eigen::Index kBlock = 128;
  UpdateResult result{nn::Grad(actor.layout()), nn::Grad(critic.layout()), {}};
  auto& stats = result.stats;
  stats.steps = static_cast<std::size_t>(n);
  Eigen::MatrixXd critic_out_grad;
  Eigen::MatrixXd actor_out_grad;
  for (Eigen::Index b0 = 0; b0 < n; b0 += kBlock) {
    const Eigen::Index m = std::min(kBlock, n - b0);
    const Eigen::MatrixXd block = states.middleCols(b0, m);
    const auto critic_pass = nn::Forward(critic, block);
    const auto actor_pass = nn::Forward(actor, block);
    critic_out_grad.resize(1, m);
    actor_out_grad.resize(2, m);
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto k = static_cast<std::size_t>(b0 + c);
      const double value = critic_pass.output(0, c);
      const double advantage = returns[k] - value;
      critic_out_grad(0, c) = -weights.critic * advantage;

      const double raw = actor_pass.output(1, c);
      const auto head = HeadFromOutput(actor_pass.output(0, c), raw);
      const double inv_var = std::exp(-2.0 * head.log_sigma);
      const double d = z[k] - head.mu;
      const double dlogp_dmu = d * inv_var;
      const double dlogp_dls = d * d * inv_var - 1.0;
      actor_out_grad(0, c) = -weights.actor * advantage * dlogp_dmu;
      actor_out_grad(1, c) =
          head.clamped ? 0.0 : -weights.actor * advantage * dlogp_dls - weights.entropy;

      const double entropy = Entropy(head);
      stats.mean_advantage += advantage;
      stats.mean_entropy += entropy;
      stats.actor_loss += -weights.actor * advantage * LogProb(head, z[k]) - weights.entropy * entropy;
      stats.critic_loss += 0.5 * weights.critic * advantage * advantage;
    }
    result.actor_grad += nn::Backward(actor, actor_pass.cache, actor_out_grad);
    result.critic_grad += nn::Backward(critic, critic_pass.cache, critic_out_grad);
  }
  stats.mean_advantage /= static_cast<double>(n);
  stats.mean_entropy /= static_cast<double>(n);
  return result;
}

UpdateResult ComputeUpdate(const Trajectory& trajectory, const nn::Params& actor,
                           const nn::Params& critic, const LossWeights& weights, double gamma) {
  return ComputeUpdate(std::span<const Trajectory>(&trajectory, 1), actor, critic, weights, gamma);
}

double ActorLoss(const nn::Params& actor, const Eigen::MatrixXd& states, std::span<const double> z,
                 std::span<const double> advantages, const LossWeights& weights) {
  const auto out = nn::Predict(actor, states);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto head = HeadFromOutput(out(0, i), out(1, i));
    loss += -weights.actor * advantages[k] * LogProb(head, z[k]) - weights.entropy * Entropy(head);
  }
  return loss;
}

double CriticLoss(const nn::Params& critic, const Eigen::MatrixXd& states,
                  std::span<const double> returns, const LossWeights& weights) {
  const auto out = nn::Predict(critic, states);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const double a = returns[static_cast<std::size_t>(i)] - out(0, i);
    loss += 0.5 * weights.critic * a * a;
  }
  return loss;
}

nn::Grad ScoreGradient(const nn::Params& actor, const Eigen::MatrixXd& states,
                       std::span<const double> z, std::span<const double> coefficients) {
  if (z.size() != static_cast<std::size_t>(states.cols()) || coefficients.size() != z.size()) {
    throw std::invalid_argument("ScoreGradient: size mismatch");
  }
  auto pass = nn::Forward(actor, states);
  Eigen::MatrixXd out_grad(2, states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto head = HeadFromOutput(pass.output(0, i), pass.output(1, i));
    const double inv_var = std::exp(-2.0 * head.log_sigma);
    const double d = z[k] - head.mu;
    out_grad(0, i) = coefficients[k] * d * inv_var;
    out_grad(1, i) = head.clamped ? 0.0 : coefficients[k] * (d * d * inv_var - 1.0);
  }
  return nn::Backward(actor, pass.cache, out_grad);
}

}  // namespace motiac::agent
