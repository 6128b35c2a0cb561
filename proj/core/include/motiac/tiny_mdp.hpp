// SPDX-License-Identifier: Apache-2.0
//
// Exact-expectation checks on small problems: the scalarized multi-critic
// policy gradient on a two-state MDP, and the identity between partitioned
// and combined advantages when every critic is the same function.

#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "motiac/nn.hpp"

namespace motiac::analysis {

inline constexpr int kTinyStates = 2;
inline constexpr int kTinyActions = 2;

using Table = std::array<std::array<double, kTinyActions>, kTinyStates>;

/// Deterministic two-state, two-action MDP with one reward table per
/// objective, finite horizon and no discounting.
struct TinyMdp {
  int horizon = 3;
  int start = 0;
  std::array<std::array<int, kTinyActions>, kTinyStates> next{{{0, 1}, {0, 1}}};
  std::vector<Table> rewards;

  int num_objectives() const { return static_cast<int>(rewards.size()); }
  void Validate() const;

  /// The fixed instance used by the acceptance checks.
  static TinyMdp Committed();
};

/// Tabular softmax policy logits theta[s][a], flattened as s * 2 + a.
using Logits = std::array<double, kTinyStates * kTinyActions>;

Logits CommittedLogits();

/// E[sum_t R_k(s_t, a_t)] for every objective, by enumerating all action
/// sequences.
std::vector<double> ExpectedUtilities(const TinyMdp& mdp, const Logits& theta);

/// sum_k l_k E[sum_i (G_{k,i} - V_k(s_i)) grad log pi(a_i | s_i)], exact over
/// all trajectories. `baselines[k][s]` is critic k's value of state s.
Logits PartitionDirection(const TinyMdp& mdp, const Logits& theta, std::span<const double> l,
                          std::span<const std::array<double, kTinyStates>> baselines);

/// Central-difference gradient of sum_k l_k E[U^k].
Logits ScalarizedGradientFd(const TinyMdp& mdp, const Logits& theta, std::span<const double> l,
                            double eps = 1e-5);

/// max_i |direction_i - fd_i| / max(max_i |fd_i|, 1e-12). Baselines default
/// to a fixed non-trivial table per objective.
double ScalarizationCheck(const TinyMdp& mdp, const Logits& theta, std::span<const double> l);
double ScalarizationCheck(const TinyMdp& mdp, const Logits& theta, std::span<const double> l,
                          std::span<const std::array<double, kTinyStates>> baselines);

/// Compares sum_k w_k * score_gradient(R_k - V_k) with
/// score_gradient(sum_k w_k R_k - V_0) on one batch of steps. `returns[k]` and
/// `values[k]` hold per-step returns and critic values. Returns the largest
/// absolute entry difference. Throws when the weights do not sum to 1.
double PartitionCombinationDeviation(const nn::Params& actor, const Eigen::MatrixXd& states,
                                     std::span<const double> z,
                                     std::span<const std::vector<double>> returns,
                                     std::span<const std::vector<double>> values,
                                     std::span<const double> weights);

}  // namespace motiac::analysis
