#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "insample/agents.hpp"
#include "insample/config.hpp"
#include "insample/envs.hpp"
#include "insample/offline_data.hpp"
#include "insample/solvers.hpp"

namespace insample {

/// Throws std::invalid_argument unless `name` is "fourrooms".
FourRooms make_env(const std::string& name);

/// Greedy policy of the hard-max value-iteration fixed point.
Policy optimal_policy(const FourRooms& env);

/// expert | random | mixed | missing-action.
const std::vector<std::string>& recipe_names();

/// Builds a dataset by recipe. `mixed` draws n/100 expert and the rest random
/// transitions (100 + 9900 at n = 10000); `missing-action` filters `mixed`
/// by removing every down move taken in the upper-left room.
OfflineDataset make_recipe_dataset(const FourRooms& env, const std::string& recipe, std::size_t n,
                                   std::uint64_t seed);

void cmd_gen_data(const std::string& env, const std::string& recipe, std::size_t n,
                  std::uint64_t seed, const std::filesystem::path& out_path);

struct SolveOptions {
  std::string env = "fourrooms";
  std::string mdp_path;   // overrides env when set
  std::string method;     // hard-vi | soft-vi | insample-hard-vi | insample-soft-vi | insample-soft-pi
  double tau = 0.01;
  std::string data;       // dataset for the support of in-sample methods
  double tol = kDefaultTolerance;
  std::filesystem::path out_dir;
};

struct SolveSummary {
  SolveReport report;
  std::optional<Policy> policy;       // policy iteration only
  std::optional<double> start_value;  // max_a q(start, a) for the Four Rooms env
};

const std::vector<std::string>& solve_methods();

/// Solves and writes `q.txt` and `report.csv` (plus `policy.txt` for policy
/// iteration) into out_dir when it is non-empty.
SolveSummary cmd_solve(const SolveOptions& options);

/// `q-table <n_states> <n_actions>` followed by one row per state.
void write_q_table(const QTable& q, const std::filesystem::path& path);
QTable read_q_table(const std::filesystem::path& path);

struct SweepEntry {
  double learning_rate;
  std::vector<std::uint64_t> seeds;
  std::vector<TrainResult> runs;  // one per seed
  double mean_final_value = 0.0;
  double mean_final_return = 0.0;
  double stderr_final_return = 0.0;
};

struct SweepResult {
  std::vector<SweepEntry> entries;  // in learning-rate order of the config
  std::size_t best = 0;
};

TrainResult train_agent(const std::string& agent, const OfflineDataset& data,
                        const TrainConfig& config, const FourRooms& env);

/// The configured dataset: read from `data` or generated from the recipe.
OfflineDataset experiment_dataset(const ExperimentConfig& config, const FourRooms& env);

/// Runs every (learning rate, seed) pair, `jobs` at a time. The winner has
/// the highest mean final exact start value; ties go to the lower rate.
SweepResult run_sweep(const ExperimentConfig& config, const OfflineDataset& data,
                      const FourRooms& env);

/// run_sweep plus output files in config.out: config.txt, one curve CSV,
/// policy table and checkpoint per run, and summary.csv.
SweepResult cmd_train(const ExperimentConfig& config);

/// Exact start value and Monte-Carlo return of a stored policy. Accepts a
/// policy-table file or an actor checkpoint.
CurvePoint cmd_eval(const std::filesystem::path& policy_path, const std::string& env,
                    std::size_t episodes, std::uint64_t seed);

/// Line plot of update vs rollout_return_mean, one polyline and legend entry
/// per curve in input order.
void cmd_plot(const std::vector<std::filesystem::path>& curves,
              const std::filesystem::path& out_svg);

}  // namespace insample
