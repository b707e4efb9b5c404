#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "insample/mdp.hpp"
#include "insample/random.hpp"

namespace insample {

struct Cell {
  int row;
  int col;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// 13x13 four-room gridworld.
///
/// Layout (row 0 at the top, '#' wall, 'S' start, 'G' goal):
///
///   ......#.....G
///   ......#......
///   .............      doorway (2, 6)
///   ......#......
///   ......#......
///   ......#......
///   ##.######.###      doorways (6, 2) and (6, 9)
///   ......#......
///   ......#......
///   .............      doorway (9, 6)
///   ......#......
///   ......#......
///   S.....#......
///
/// Interior walls fill row 6 and column 6 except for one doorway centred in
/// each half-wall. Wall cells are not states; traversable cells are indexed
/// in row-major order. Moves into a wall or off the grid leave the agent in
/// place. Every transition that lands on the goal pays +1, including bumping
/// into the boundary while standing on it; the goal is not terminal.
class FourRooms {
 public:
  static constexpr int kSize = 13;
  static constexpr int kWallIndex = 6;
  static constexpr double kGamma = 0.9;
  static constexpr std::size_t kHorizon = 100;
  static constexpr Cell kStart{12, 0};
  static constexpr Cell kGoal{0, 12};
  static constexpr Cell kDoorways[4] = {{6, 2}, {6, 9}, {2, 6}, {9, 6}};

  enum Action : ActionId { kUp = 0, kDown = 1, kRight = 2, kLeft = 3 };
  static constexpr std::size_t kNumActions = 4;

  FourRooms();

  const TabularMDP& mdp() const { return mdp_; }
  StateId start() const { return start_; }
  StateId goal() const { return goal_; }
  std::size_t horizon() const { return kHorizon; }
  std::size_t n_states() const { return cells_.size(); }

  static bool is_wall(Cell c);
  std::optional<StateId> state_of(Cell c) const;
  Cell cell_of(StateId s) const { return cells_[s]; }

  /// Cells of the upper-left room interior (rows 0-5, columns 0-5). The
  /// doorways bordering the room are not part of it.
  std::vector<StateId> upper_left_room() const;

  /// The layout drawn as in the class comment.
  std::string ascii() const;

  static const char* action_name(ActionId a);

 private:
  std::vector<Cell> cells_;
  std::vector<int> index_;  // kSize*kSize, -1 for walls
  StateId start_ = 0;
  StateId goal_ = 0;
  TabularMDP mdp_;
};

FourRooms build_four_rooms();

/// Random MDP: every (s, a) row has `branching` distinct successors with
/// uniform(0,1] weights normalized to 1; rewards i.i.d. uniform [0, 1].
TabularMDP random_mdp(std::size_t n_states, std::size_t n_actions, std::size_t branching,
                      std::uint64_t seed, double gamma = 0.9);

/// Draws s' from the transition row of (s, a).
StateId sample_next_state(const TabularMDP& mdp, StateId s, ActionId a, Rng& rng);

struct StepResult {
  StateId next_state;
  double reward;
  bool truncated;
};

/// Episodic sampler over a shared MDP. Single-owner and mutable.
class EpisodeSimulator {
 public:
  EpisodeSimulator(const TabularMDP& mdp, StateId start, std::size_t horizon, std::uint64_t seed);

  void reset();
  StepResult step(ActionId a);

  StateId state() const { return state_; }
  std::size_t steps() const { return steps_; }
  std::size_t horizon() const { return horizon_; }
  const TabularMDP& mdp() const { return *mdp_; }
  Rng& rng() { return rng_; }

 private:
  const TabularMDP* mdp_;
  StateId start_;
  std::size_t horizon_;
  Rng rng_;
  StateId state_;
  std::size_t steps_ = 0;
};

struct RolloutResult {
  double ret = 0.0;
  double discounted_return = 0.0;
  std::size_t steps = 0;
};

/// One episode from the start state, actions sampled from pi, stopping at the
/// simulator horizon.
RolloutResult rollout(EpisodeSimulator& sim, const Policy& pi);

}  // namespace insample
