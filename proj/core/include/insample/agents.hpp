#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "insample/approximator.hpp"
#include "insample/envs.hpp"
#include "insample/mdp.hpp"
#include "insample/offline_data.hpp"
#include "insample/optim.hpp"
#include "insample/random.hpp"

namespace insample {

struct TrainConfig {
  double learning_rate = 0.003;
  double tau = 0.01;
  std::size_t batch_size = 100;
  std::size_t updates = 50000;
  std::size_t eval_interval = 1000;
  double init_value = 10.0;  // critic and baseline weights
  std::uint64_t seed = 0;
  double exp_clip = 20.0;     // upper clip on the actor weight exponent
  double weight_floor = 1e-8;  // lower clip on the actor weight (0 disables)
  std::size_t eval_episodes = 5;
  double polyak = 0.995;

  // Behavior cloning: `bc_steps` minibatch Adam steps before the main loop,
  // or the exact count estimate when `behavior_from_counts` is set.
  std::size_t bc_steps = 5000;
  double bc_learning_rate = 0.01;
  bool behavior_from_counts = false;
  bool behavior_online = false;  // keep cloning during the main loop

  // Replace v(s) in the actor weight with the direct sum
  // tau * log sum_a pi_w(a|s) exp(q(s,a)/tau - log pi_w(a|s)).
  bool exact_normalizer = false;

  // "tabular" (one-hot lookup tables) or "mlp" (ReLU network on one-hot
  // state features with `hidden` units per layer).
  std::string architecture = "tabular";
  std::vector<std::size_t> hidden = {64, 64};

  /// Throws std::invalid_argument naming the first bad field.
  void validate(std::size_t dataset_size) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

using Batch = std::span<const Transition>;

/// (state, action) pairs at which a quantity was read during an actor update.
struct ActorQueryLog {
  std::vector<std::pair<StateId, ActionId>> critic;
  std::vector<std::pair<StateId, ActionId>> behavior;
  std::vector<std::pair<StateId, ActionId>> actor;
  std::vector<StateId> baseline;
};

/// In-sample actor-critic over a discrete state space with one-hot state
/// features.
///
/// The *_loss functions return the minibatch loss and add its gradient to
/// the owning approximator; the *_update functions wrap them with zero_grad
/// and an optimizer step.
class InACAgent {
 public:
  InACAgent(std::size_t n_states, std::size_t n_actions, double gamma, const TrainConfig& config);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  double tau() const { return tau_; }

  Approximator& actor() { return *actor_; }
  Approximator& critic() { return *critic_; }
  Approximator& baseline() { return *baseline_; }
  Approximator& behavior() { return *behavior_; }
  Approximator& critic_target() { return *critic_target_; }
  Approximator& baseline_target() { return *baseline_target_; }

  /// Replaces the learned behavior model by a fixed table (count estimate).
  void set_behavior_table(const Policy& table);

  double behavior_loss(Batch batch);
  /// 1/2 (r + gamma v_target(s') - q(s,a))^2, gradient into the critic only.
  double critic_loss(Batch batch);
  /// 1/2 (v(s) - (q_target(s,a_i) - tau log pi(a_i|s)))^2 with a_i drawn from
  /// the actor beforehand, gradient into the baseline only.
  double baseline_loss(Batch batch, std::span<const ActionId> actor_actions);
  /// -w log pi(a|s) over dataset pairs with
  /// w = max(exp(min((q(s,a) - v(s))/tau - log pi_w(a|s), clip)), floor);
  /// gradient into the actor only.
  double actor_loss(Batch batch, ActorQueryLog* log = nullptr);

  double behavior_cloning_update(Batch batch, Optimizer& opt);
  double critic_update(Batch batch);
  double baseline_update(Batch batch, Rng& rng);
  double actor_update(Batch batch, ActorQueryLog* log = nullptr);
  void update_targets();

  /// One sample per batch state from the current actor.
  std::vector<ActionId> sample_actor_actions(Batch batch, Rng& rng);

  std::vector<double> actor_probs(StateId s);
  std::vector<double> behavior_probs(StateId s);
  Policy actor_policy();
  Policy behavior_policy();
  QTable critic_table();

 private:
  double behavior_prob(StateId s, ActionId a);
  double normalizer(StateId s);

  std::size_t n_states_;
  std::size_t n_actions_;
  double gamma_;
  double tau_;
  double clip_;
  double floor_;
  double polyak_;
  bool exact_normalizer_;
  std::unique_ptr<Approximator> actor_;
  std::unique_ptr<Approximator> critic_;
  std::unique_ptr<Approximator> baseline_;
  std::unique_ptr<Approximator> behavior_;
  std::unique_ptr<Approximator> critic_target_;
  std::unique_ptr<Approximator> baseline_target_;
  std::unique_ptr<Optimizer> actor_opt_;
  std::unique_ptr<Optimizer> critic_opt_;
  std::unique_ptr<Optimizer> baseline_opt_;
  std::optional<Policy> behavior_table_;
};

struct CurvePoint {
  std::size_t update;
  double exact_start_value;
  double rollout_return_mean;
  double rollout_return_stderr;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  Policy policy;
  /// Actor checkpoint for InAC, q-table checkpoint for the value baselines.
  std::string checkpoint;
};

/// Discounted start value of `pi` and `episodes` rollouts. Stderr is the
/// sample standard deviation over sqrt(episodes).
CurvePoint evaluate_policy(const FourRooms& env, const Policy& pi, std::size_t episodes,
                           std::uint64_t seed, std::size_t update = 0);

TrainResult inac_train(const OfflineDataset& data, const TrainConfig& config, const FourRooms& env);

/// Minibatch Q-learning bootstrapping from the max over the count support of
/// the next state (0 when the next state was never visited); acts greedily on
/// the support where a state was visited and over all actions elsewhere.
TrainResult oracle_max_train(const OfflineDataset& data, const TrainConfig& config,
                             const FourRooms& env);

/// Minibatch Q-learning bootstrapping from the max over all actions.
TrainResult fqi_train(const OfflineDataset& data, const TrainConfig& config, const FourRooms& env);

/// Header `update,exact_start_value,rollout_return_mean,rollout_return_stderr`.
void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

/// Policy-table checkpoint: `policy-table <n_states> <n_actions>` then one
/// row of probabilities per state.
void write_policy_table(const Policy& pi, const std::filesystem::path& path);
Policy read_policy_table(const std::filesystem::path& path);

}  // namespace insample
