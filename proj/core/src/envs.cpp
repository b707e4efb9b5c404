#include "insample/envs.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace insample {

namespace {

constexpr int kMoves[4][2] = {{-1, 0}, {1, 0}, {0, 1}, {0, -1}};

struct Layout {
  std::vector<Cell> cells;
  std::vector<int> index;
};

Layout make_layout() {
  Layout layout;
  layout.index.assign(FourRooms::kSize * FourRooms::kSize, -1);
  for (int r = 0; r < FourRooms::kSize; ++r) {
    for (int c = 0; c < FourRooms::kSize; ++c) {
      if (FourRooms::is_wall({r, c})) continue;
      layout.index[r * FourRooms::kSize + c] = static_cast<int>(layout.cells.size());
      layout.cells.push_back({r, c});
    }
  }
  return layout;
}

MdpTables four_rooms_tables(const Layout& layout) {
  const std::size_t n = layout.cells.size();
  const std::size_t na = FourRooms::kNumActions;
  const auto goal = static_cast<std::size_t>(
      layout.index[FourRooms::kGoal.row * FourRooms::kSize + FourRooms::kGoal.col]);
  MdpTables t;
  t.n_states = n;
  t.n_actions = na;
  t.gamma = FourRooms::kGamma;
  t.reward.assign(n * na, 0.0);
  t.transition.assign(n * na * n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const Cell from = layout.cells[s];
    for (std::size_t a = 0; a < na; ++a) {
      const Cell to{from.row + kMoves[a][0], from.col + kMoves[a][1]};
      std::size_t next = s;
      if (!FourRooms::is_wall(to)) {
        next = static_cast<std::size_t>(layout.index[to.row * FourRooms::kSize + to.col]);
      }
      t.transition[(s * na + a) * n + next] = 1.0;
      if (next == goal) t.reward[s * na + a] = 1.0;
    }
  }
  return t;
}

}  // namespace

FourRooms::FourRooms()
    : cells_(make_layout().cells),
      index_(make_layout().index),
      start_(static_cast<StateId>(index_[kStart.row * kSize + kStart.col])),
      goal_(static_cast<StateId>(index_[kGoal.row * kSize + kGoal.col])),
      mdp_(four_rooms_tables(Layout{cells_, index_})) {}

bool FourRooms::is_wall(Cell c) {
  if (c.row < 0 || c.col < 0 || c.row >= kSize || c.col >= kSize) return true;
  if (c.row != kWallIndex && c.col != kWallIndex) return false;
  return std::none_of(std::begin(kDoorways), std::end(kDoorways),
                      [&](const Cell& d) { return d == c; });
}

std::optional<StateId> FourRooms::state_of(Cell c) const {
  if (is_wall(c)) return std::nullopt;
  return static_cast<StateId>(index_[c.row * kSize + c.col]);
}

std::vector<StateId> FourRooms::upper_left_room() const {
  std::vector<StateId> out;
  for (int r = 0; r < kWallIndex; ++r) {
    for (int c = 0; c < kWallIndex; ++c) out.push_back(*state_of({r, c}));
  }
  return out;
}

std::string FourRooms::ascii() const {
  std::string out;
  for (int r = 0; r < kSize; ++r) {
    for (int c = 0; c < kSize; ++c) {
      const Cell cell{r, c};
      if (cell == kStart) {
        out += 'S';
      } else if (cell == kGoal) {
        out += 'G';
      } else {
        out += is_wall(cell) ? '#' : '.';
      }
    }
    out += '\n';
  }
  return out;
}

const char* FourRooms::action_name(ActionId a) {
  static constexpr const char* kNames[] = {"up", "down", "right", "left"};
  return a < kNumActions ? kNames[a] : "?";
}

FourRooms build_four_rooms() { return FourRooms(); }

TabularMDP random_mdp(std::size_t n_states, std::size_t n_actions, std::size_t branching,
                      std::uint64_t seed, double gamma) {
  if (branching == 0 || branching > n_states) {
    throw std::invalid_argument("random_mdp: branching must be in [1, n_states]");
  }
  Rng rng = make_rng(seed, 0x6d6470);
  MdpTables t;
  t.n_states = n_states;
  t.n_actions = n_actions;
  t.gamma = gamma;
  t.reward.resize(n_states * n_actions);
  t.transition.assign(n_states * n_actions * n_states, 0.0);
  std::vector<std::size_t> order(n_states);
  for (std::size_t row = 0; row < n_states * n_actions; ++row) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates picks `branching` distinct successors.
    for (std::size_t i = 0; i < branching; ++i) {
      std::swap(order[i], order[i + uniform_index(rng, n_states - i)]);
    }
    double* p = t.transition.data() + row * n_states;
    if (branching == 1) {
      p[order[0]] = 1.0;
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < branching; ++i) {
        const double w = 1.0 - uniform01(rng);  // (0, 1]
        p[order[i]] = w;
        total += w;
      }
      for (std::size_t i = 0; i < branching; ++i) p[order[i]] /= total;
    }
  }
  for (auto& r : t.reward) r = uniform01(rng);
  return TabularMDP(std::move(t));
}

EpisodeSimulator::EpisodeSimulator(const TabularMDP& mdp, StateId start, std::size_t horizon,
                                   std::uint64_t seed)
    : mdp_(&mdp), start_(start), horizon_(horizon), rng_(make_rng(seed, 0x73696d)), state_(start) {
  if (start >= mdp.n_states()) throw std::invalid_argument("simulator: start state out of range");
}

void EpisodeSimulator::reset() {
  state_ = start_;
  steps_ = 0;
}

StateId sample_next_state(const TabularMDP& mdp, StateId s, ActionId a, Rng& rng) {
  const auto succ = mdp.successors(s, a);
  if (succ.size() == 1) return succ.front().state;
  const double u = uniform01(rng);
  double acc = 0.0;
  for (const auto& x : succ) {
    acc += x.prob;
    if (u < acc) return x.state;
  }
  return succ.back().state;
}

StepResult EpisodeSimulator::step(ActionId a) {
  if (steps_ >= horizon_) throw std::logic_error("simulator: episode already truncated");
  const StateId next = sample_next_state(*mdp_, state_, a, rng_);
  const double r = mdp_->reward(state_, a);
  state_ = next;
  ++steps_;
  return {next, r, steps_ >= horizon_};
}

RolloutResult rollout(EpisodeSimulator& sim, const Policy& pi) {
  sim.reset();
  RolloutResult out;
  double discount = 1.0;
  while (sim.steps() < sim.horizon()) {
    const ActionId a = sample_categorical(pi.row(sim.state()), sim.rng());
    const StepResult r = sim.step(a);
    out.ret += r.reward;
    out.discounted_return += discount * r.reward;
    discount *= sim.mdp().gamma();
  }
  out.steps = sim.steps();
  return out;
}

}  // namespace insample
