// SPDX-License-Identifier: Apache-2.0
//
// Property-check suite behind `motiac check`.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace motiac::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // worst observed error / statistic
  double tolerance = 0.0;
  std::string detail;
};

std::vector<CheckResult> Rewards();
/// `instances` random nets for backward, the same number of random
/// trajectories for the actor / critic loss gradients.
std::vector<CheckResult> Gradients(int instances = 20, std::uint64_t seed = 7);
std::vector<CheckResult> Posterior(std::uint64_t seed = 11);
std::vector<CheckResult> Partition(std::uint64_t seed = 13);
std::vector<CheckResult> Pareto(int weight_vectors = 10, std::uint64_t seed = 17);
std::vector<CheckResult> Environment(int episodes = 200, std::uint64_t seed = 19);

/// Suite names: rewards, gradients, posterior, partition, pareto, env, all.
std::vector<std::string_view> SuiteNames();
bool IsSuite(std::string_view name);
std::vector<CheckResult> RunSuite(std::string_view name);

/// One line per check; returns true when every check passed.
bool Print(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace motiac::checks
