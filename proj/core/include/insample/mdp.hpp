#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace insample {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Raised when an MDP violates one of its structural invariants. Carries the
/// offending (state, action) coordinates when the violation is row-local.
class MdpError : public std::invalid_argument {
 public:
  static constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

  MdpError(const std::string& what, std::size_t state = kNoIndex,
           std::size_t action = kNoIndex);

  std::size_t state() const { return state_; }
  std::size_t action() const { return action_; }

 private:
  std::size_t state_;
  std::size_t action_;
};

/// Plain tables describing a finite MDP, before validation.
///
/// `transition` is row-major with one row of length n_states per
/// (state, action) pair, rows ordered by state then action. `reward` is
/// row-major n_states x n_actions.
struct MdpTables {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> transition;
  std::vector<double> reward;
  double gamma = 0.9;
};

/// Throws MdpError describing the first violated invariant.
void validate_mdp(const MdpTables& tables);

struct Successor {
  StateId state;
  double prob;
};

/// A validated finite MDP. Immutable after construction.
class TabularMDP {
 public:
  explicit TabularMDP(MdpTables tables);

  std::size_t n_states() const { return tables_.n_states; }
  std::size_t n_actions() const { return tables_.n_actions; }
  double gamma() const { return tables_.gamma; }

  double reward(StateId s, ActionId a) const {
    return tables_.reward[s * tables_.n_actions + a];
  }
  std::span<const double> transition_row(StateId s, ActionId a) const {
    return {tables_.transition.data() + (s * tables_.n_actions + a) * tables_.n_states,
            tables_.n_states};
  }
  /// Next states with positive probability, in increasing state order.
  std::span<const Successor> successors(StateId s, ActionId a) const {
    const std::size_t row = s * tables_.n_actions + a;
    return {successors_.data() + row_begin_[row], row_begin_[row + 1] - row_begin_[row]};
  }

  const MdpTables& tables() const { return tables_; }

 private:
  MdpTables tables_;
  std::vector<Successor> successors_;
  std::vector<std::size_t> row_begin_;
};

void validate_mdp(const TabularMDP& mdp);

/// Per-state action distributions, row-major n_states x n_actions.
class Policy {
 public:
  Policy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  double operator()(StateId s, ActionId a) const { return probs_[s * n_actions_ + a]; }
  std::span<const double> row(StateId s) const {
    return {probs_.data() + s * n_actions_, n_actions_};
  }
  const std::vector<double>& probs() const { return probs_; }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> probs_;
};

class QTable {
 public:
  QTable(std::size_t n_states, std::size_t n_actions, std::vector<double> values);
  static QTable constant(std::size_t n_states, std::size_t n_actions, double value);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  double operator()(StateId s, ActionId a) const { return values_[s * n_actions_ + a]; }
  std::span<const double> row(StateId s) const {
    return {values_.data() + s * n_actions_, n_actions_};
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> values_;
};

class VTable {
 public:
  explicit VTable(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator()(StateId s) const { return values_[s]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Boolean mask over (state, action): which actions each state may use.
class SupportSet {
 public:
  SupportSet(std::size_t n_states, std::size_t n_actions, std::vector<std::uint8_t> mask);
  static SupportSet full(std::size_t n_states, std::size_t n_actions);
  /// Positive-probability entries of `pi`.
  static SupportSet of(const Policy& pi);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  bool allowed(StateId s, ActionId a) const { return mask_[s * n_actions_ + a] != 0; }
  std::span<const std::uint8_t> row(StateId s) const {
    return {mask_.data() + s * n_actions_, n_actions_};
  }
  bool empty(StateId s) const;
  std::size_t count(StateId s) const;
  /// States whose support is empty.
  std::vector<StateId> empty_states() const;

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<std::uint8_t> mask_;
};

Policy uniform_policy(std::size_t n_states, std::size_t n_actions);

/// Deterministic argmax policy restricted to `support`; ties go to the lowest
/// action index. Throws std::invalid_argument naming the first state whose
/// support is empty.
Policy greedy_policy(const QTable& q, const SupportSet& support);

/// Index of the largest `values[a]` with `mask[a]` set, lowest index on ties.
ActionId masked_argmax(std::span<const double> values, std::span<const std::uint8_t> mask);

/// v^pi: direct linear solve when n_states * n_actions <= 1e4, otherwise
/// fixed-point iteration until the Bellman residual is below 1e-10.
VTable exact_policy_value(const TabularMDP& mdp, const Policy& pi);

/// q^pi(s,a) = r(s,a) + gamma * E[v^pi(s')].
QTable q_from_v(const TabularMDP& mdp, const VTable& v);

/// Plain-text MDP file:
///
///   n_states <int>
///   n_actions <int>
///   gamma <real>
///   reward
///   <n_states lines of n_actions reals>
///   transition
///   <n_states*n_actions lines of n_states reals, ordered by state then action>
///
/// Reals are written in shortest round-trip form.
void write_mdp(const TabularMDP& mdp, const std::filesystem::path& path);
TabularMDP read_mdp(const std::filesystem::path& path);

}  // namespace insample
