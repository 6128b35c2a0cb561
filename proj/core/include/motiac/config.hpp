// SPDX-License-Identifier: Apache-2.0
//
// Flat `key = value` experiment configuration with `#` comments and dotted
// keys, e.g. `env.n_ads = 50`.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "motiac/baselines.hpp"
#include "motiac/rtb_env.hpp"
#include "motiac/trainer.hpp"

namespace motiac::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Model { kMotiac, kAggA3c, kO1, kO2, kPid, kFixed };

std::string_view ToString(Model model);
Model ParseModel(std::string_view name);  // throws ConfigError

struct ExperimentConfig {
  Model model = Model::kMotiac;
  rtb::EnvConfig env;
  std::optional<std::filesystem::path> catalog_path;
  std::optional<std::filesystem::path> base_path;
  std::vector<std::uint64_t> base_seeds{1, 2, 3, 4, 5};
  train::TrainConfig train;
  std::vector<double> combo{0.5, 0.5};
  baselines::PidConfig pid;
  double fixed_multiplier = 1.0;
  int final_window = 10;
  std::filesystem::path out_dir = "runs";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  /// Throws ConfigError on anything the run could not start with.
  void Validate() const;
};

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// a malformed line or a repeated key throws ConfigError naming the line.
std::map<std::string, std::string> ParseKeyValues(std::string_view text);

/// Applies parsed keys over `base`. Unknown keys and unparsable values
/// throw ConfigError.
ExperimentConfig Apply(const std::map<std::string, std::string>& values, ExperimentConfig base = {});

ExperimentConfig LoadFile(const std::filesystem::path& path);

/// `1,2,3` -> {1, 2, 3}.
std::vector<std::uint64_t> ParseSeedList(std::string_view text);

/// Canonical `key = value` dump of every setting, sorted by key.
std::string Dump(const ExperimentConfig& cfg);

}  // namespace motiac::config
