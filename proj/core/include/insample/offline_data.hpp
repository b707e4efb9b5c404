#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "insample/envs.hpp"
#include "insample/mdp.hpp"
#include "insample/operators.hpp"

namespace insample {

struct Transition {
  StateId state;
  ActionId action;
  double reward;
  StateId next_state;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Contiguous block of a dataset produced by one recipe run.
struct Provenance {
  std::string recipe;
  std::uint64_t seed = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct OfflineDataset {
  std::string env;
  std::string recipe;
  std::uint64_t seed = 0;
  std::vector<Transition> transitions;
  std::vector<Provenance> segments;
  /// Indices of transitions that ended an episode at the horizon. The
  /// transitions themselves are ordinary tuples.
  std::vector<std::size_t> truncations;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
};

/// Horizon-length episodes from `start` under `behavior`, concatenated until
/// `n_transitions` are collected (the last episode may be cut short).
OfflineDataset collect_episodic(const TabularMDP& mdp, StateId start, std::size_t horizon,
                                const Policy& behavior, std::size_t n_transitions,
                                std::uint64_t seed);
OfflineDataset collect_episodic(const FourRooms& env, const Policy& behavior,
                                std::size_t n_transitions, std::uint64_t seed);

/// Independent transitions from a uniformly random state with a uniformly
/// random action.
OfflineDataset collect_random_restart(const TabularMDP& mdp, std::size_t n_transitions,
                                      std::uint64_t seed);
OfflineDataset collect_random_restart(const FourRooms& env, std::size_t n_transitions,
                                      std::uint64_t seed);

inline constexpr std::size_t kMixedExpertCount = 100;
inline constexpr std::size_t kMixedRandomCount = 9900;

/// The first `n_expert` expert transitions followed by the first `n_random`
/// random ones.
OfflineDataset make_mixed(const OfflineDataset& expert, const OfflineDataset& random,
                          std::size_t n_expert = kMixedExpertCount,
                          std::size_t n_random = kMixedRandomCount);

/// Drops every transition whose state lies in `region` and whose action is
/// `removed_action`; everything else is kept in order.
OfflineDataset make_missing_action(const OfflineDataset& data, const std::vector<StateId>& region,
                                   ActionId removed_action);

/// Count-based maximum-likelihood estimate of the behavior policy.
class EmpiricalBehavior {
 public:
  EmpiricalBehavior(std::size_t n_states, std::size_t n_actions,
                    std::vector<std::size_t> counts);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t count(StateId s, ActionId a) const { return counts_[s * n_actions_ + a]; }
  std::size_t state_count(StateId s) const { return totals_[s]; }
  bool visited(StateId s) const { return totals_[s] > 0; }
  /// count / state total; 0 for unvisited states.
  double probability(StateId s, ActionId a) const;

  /// Positive-count mask. Unvisited states have an empty row.
  const SupportSet& support() const { return support_; }
  /// 1 for visited states, 0 otherwise.
  LiveMask live_mask() const;
  std::vector<StateId> unvisited_states() const;

  /// Estimated probabilities as a Policy. Unvisited states, which carry no
  /// estimate, get a uniform row so the table stays a valid policy.
  Policy policy() const;

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> totals_;
  SupportSet support_;
};

EmpiricalBehavior estimate_behavior(const OfflineDataset& data, std::size_t n_states,
                                    std::size_t n_actions);

/// CSV with header `state,action,reward,next_state`. Only the transitions are
/// stored; provenance is not part of the file.
void write_dataset(const OfflineDataset& data, const std::filesystem::path& path);
OfflineDataset read_dataset(const std::filesystem::path& path);

/// Throws std::out_of_range when a transition indexes outside the MDP.
void check_dataset(const OfflineDataset& data, const TabularMDP& mdp);

}  // namespace insample
