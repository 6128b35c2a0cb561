// SPDX-License-Identifier: Apache-2.0
#include "motiac/tiny_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "motiac/agent.hpp"

namespace motiac::analysis {

namespace {

std::array<double, kTinyActions> Softmax(const Logits& theta, int s) {
  const double a0 = theta[static_cast<std::size_t>(s * kTinyActions)];
  const double a1 = theta[static_cast<std::size_t>(s * kTinyActions + 1)];
  const double m = std::max(a0, a1);
  const double e0 = std::exp(a0 - m);
  const double e1 = std::exp(a1 - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

// Calls visit(prob, states, actions) for every action sequence.
template <typename Visit>
void Enumerate(const TinyMdp& mdp, const Logits& theta, Visit&& visit) {
  const int h = mdp.horizon;
  std::vector<int> states(static_cast<std::size_t>(h));
  std::vector<int> actions(static_cast<std::size_t>(h));
  for (int code = 0; code < (1 << h); ++code) {
    double p = 1.0;
    int s = mdp.start;
    for (int t = 0; t < h; ++t) {
      const int a = (code >> t) & 1;
      states[static_cast<std::size_t>(t)] = s;
      actions[static_cast<std::size_t>(t)] = a;
      p *= Softmax(theta, s)[static_cast<std::size_t>(a)];
      s = mdp.next[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
    }
    visit(p, states, actions);
  }
}

double Scalarized(const TinyMdp& mdp, const Logits& theta, std::span<const double> l) {
  const auto u = ExpectedUtilities(mdp, theta);
  double v = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) v += l[k] * u[k];
  return v;
}

void CheckWeights(const TinyMdp& mdp, std::span<const double> l) {
  if (l.size() != static_cast<std::size_t>(mdp.num_objectives())) {
    throw std::invalid_argument("tiny MDP: one weight per objective required");
  }
}

std::vector<std::array<double, kTinyStates>> DefaultBaselines(int k) {
  std::vector<std::array<double, kTinyStates>> b;
  for (int j = 0; j < k; ++j) b.push_back({0.7 + 0.3 * j, -0.4 + 0.5 * j});
  return b;
}

}  // namespace

void TinyMdp::Validate() const {
  if (horizon < 1 || horizon > 20) throw std::invalid_argument("tiny MDP: horizon must be in [1, 20]");
  if (start < 0 || start >= kTinyStates) throw std::invalid_argument("tiny MDP: bad start state");
  for (const auto& row : next) {
    for (int s : row) {
      if (s < 0 || s >= kTinyStates) throw std::invalid_argument("tiny MDP: bad transition");
    }
  }
  if (rewards.empty()) throw std::invalid_argument("tiny MDP: need at least one objective");
}

TinyMdp TinyMdp::Committed() {
  TinyMdp m;
  m.horizon = 3;
  m.start = 0;
  m.next = {{{0, 1}, {0, 1}}};
  m.rewards = {
      Table{{{1.0, 0.2}, {0.0, 0.8}}},
      Table{{{0.1, 0.9}, {0.7, -0.3}}},
  };
  return m;
}

Logits CommittedLogits() { return {0.3, -0.2, -0.5, 0.4}; }

std::vector<double> ExpectedUtilities(const TinyMdp& mdp, const Logits& theta) {
  mdp.Validate();
  std::vector<double> u(static_cast<std::size_t>(mdp.num_objectives()), 0.0);
  Enumerate(mdp, theta, [&](double p, const std::vector<int>& states, const std::vector<int>& actions) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      double g = 0.0;
      for (std::size_t t = 0; t < states.size(); ++t) {
        g += mdp.rewards[k][static_cast<std::size_t>(states[t])][static_cast<std::size_t>(actions[t])];
      }
      u[k] += p * g;
    }
  });
  return u;
}

Logits PartitionDirection(const TinyMdp& mdp, const Logits& theta, std::span<const double> l,
                          std::span<const std::array<double, kTinyStates>> baselines) {
  mdp.Validate();
  CheckWeights(mdp, l);
  if (baselines.size() != l.size()) throw std::invalid_argument("tiny MDP: one baseline per objective");
  Logits dir{};
  Enumerate(mdp, theta, [&](double p, const std::vector<int>& states, const std::vector<int>& actions) {
    const std::size_t h = states.size();
    for (std::size_t k = 0; k < l.size(); ++k) {
      // Reward-to-go with gamma = 1.
      std::vector<double> g(h);
      double running = 0.0;
      for (std::size_t t = h; t-- > 0;) {
        running += mdp.rewards[k][static_cast<std::size_t>(states[t])][static_cast<std::size_t>(actions[t])];
        g[t] = running;
      }
      for (std::size_t t = 0; t < h; ++t) {
        const int s = states[t];
        const double adv = g[t] - baselines[k][static_cast<std::size_t>(s)];
        const auto pi = Softmax(theta, s);
        for (int a = 0; a < kTinyActions; ++a) {
          const double score = (a == actions[t] ? 1.0 : 0.0) - pi[static_cast<std::size_t>(a)];
          dir[static_cast<std::size_t>(s * kTinyActions + a)] += l[k] * p * adv * score;
        }
      }
    }
  });
  return dir;
}

Logits ScalarizedGradientFd(const TinyMdp& mdp, const Logits& theta, std::span<const double> l,
                            double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("tiny MDP: eps must be > 0");
  CheckWeights(mdp, l);
  Logits g{};
  for (std::size_t i = 0; i < theta.size(); ++i) {
    Logits plus = theta;
    Logits minus = theta;
    plus[i] += eps;
    minus[i] -= eps;
    g[i] = (Scalarized(mdp, plus, l) - Scalarized(mdp, minus, l)) / (2.0 * eps);
  }
  return g;
}

double ScalarizationCheck(const TinyMdp& mdp, const Logits& theta, std::span<const double> l) {
  const auto b = DefaultBaselines(mdp.num_objectives());
  return ScalarizationCheck(mdp, theta, l, b);
}

double ScalarizationCheck(const TinyMdp& mdp, const Logits& theta, std::span<const double> l,
                          std::span<const std::array<double, kTinyStates>> baselines) {
  const auto dir = PartitionDirection(mdp, theta, l, baselines);
  const auto fd = ScalarizedGradientFd(mdp, theta, l);
  double scale = 1e-12;
  double diff = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    scale = std::max(scale, std::abs(fd[i]));
    diff = std::max(diff, std::abs(dir[i] - fd[i]));
  }
  return diff / scale;
}

double PartitionCombinationDeviation(const nn::Params& actor, const Eigen::MatrixXd& states,
                                     std::span<const double> z,
                                     std::span<const std::vector<double>> returns,
                                     std::span<const std::vector<double>> values,
                                     std::span<const double> weights) {
  const std::size_t k = weights.size();
  if (k == 0 || returns.size() != k || values.size() != k) {
    throw std::invalid_argument("partition check: need K returns, K values and K weights");
  }
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("partition check: weights must sum to 1");
  const std::size_t n = z.size();
  for (std::size_t j = 0; j < k; ++j) {
    if (returns[j].size() != n || values[j].size() != n) {
      throw std::invalid_argument("partition check: per-step size mismatch");
    }
  }

  // Partition: each group pushes w_k * grad with its own advantage.
  nn::Grad partition = nn::Grad::ZerosLike(actor);
  std::vector<double> coeff(n);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) coeff[i] = returns[j][i] - values[j][i];
    auto g = agent::ScoreGradient(actor, states, z, coeff);
    g *= weights[j];
    partition += g;
  }
  // Combination: one critic (the first) on the blended return.
  for (std::size_t i = 0; i < n; ++i) {
    double blended = 0.0;
    for (std::size_t j = 0; j < k; ++j) blended += weights[j] * returns[j][i];
    coeff[i] = blended - values[0][i];
  }
  const auto combination = agent::ScoreGradient(actor, states, z, coeff);

  const auto a = partition.Flatten();
  const auto b = combination.Flatten();
  double dev = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a[i] - b[i]));
  return dev;
}

}  // namespace motiac::analysis
