#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "insample/agents.hpp"

namespace insample {

/// Everything one `train` invocation needs. Text form is one `key = value`
/// per line; `#` starts a comment; list values are comma separated.
struct ExperimentConfig {
  std::string env = "fourrooms";
  std::string agent = "inac";      // inac | oracle-max | fqi
  std::string recipe = "expert";   // used when `data` is empty
  std::string data;                // dataset CSV; generated from recipe when empty
  std::size_t n = 10000;           // transitions for a generated dataset
  std::uint64_t data_seed = 0;
  std::string out = "out";
  TrainConfig train;
  std::vector<double> learning_rates = {0.1, 0.03, 0.01, 0.003, 0.001};
  std::vector<std::uint64_t> seeds = {0};
  std::size_t jobs = 1;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Sets one field from its text form. Throws std::invalid_argument naming
/// the key when it is unknown or its value does not parse.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key in a fixed order; parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& config);

/// Names accepted by apply_setting, in to_text order.
const std::vector<std::string>& config_keys();

}  // namespace insample
